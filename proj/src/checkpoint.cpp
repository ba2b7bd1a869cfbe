// Copyright 2026 The rcnp authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rcnp/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rcnp::cli {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

void put_tensor(std::string& out, const Tensor& t) {
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put_u64(out, d);
  for (std::size_t i = 0; i < t.size(); ++i) put_f64(out, t[i]);
}

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  bool at_end() const { return pos_ >= data_.size(); }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string raw(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  Tensor tensor() {
    const std::uint32_t rank = u32();
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t i = 0; i < rank; ++i) shape[i] = u64();
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = f64();
    return t;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) {
      throw std::runtime_error("corrupt file (truncated): " + path_);
    }
  }
  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string fmt_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

const char* comparison_name(encoding::Comparison c) {
  return c == encoding::Comparison::kDifference ? "diff" : "dist";
}

bool parse_comparison(const std::string& s, encoding::Comparison& out) {
  if (s == "diff") {
    out = encoding::Comparison::kDifference;
    return true;
  }
  if (s == "dist") {
    out = encoding::Comparison::kDistance;
    return true;
  }
  return false;
}

void put_kernel(std::string& out, const gp::KernelSpec& k) {
  put_u32(out, static_cast<std::uint32_t>(k.kind));
  put_f64(out, k.output_scale);
  put_f64(out, k.lengthscale);
  put_f64(out, k.decay_lengthscale);
  put_f64(out, k.periodic_lengthscale);
  put_f64(out, k.period);
  put_u32(out, static_cast<std::uint32_t>(k.children.size()));
  for (const gp::KernelSpec& c : k.children) put_kernel(out, c);
}

gp::KernelSpec read_kernel(Reader& r) {
  gp::KernelSpec k;
  k.kind = static_cast<gp::Kern>(r.u32());
  k.output_scale = r.f64();
  k.lengthscale = r.f64();
  k.decay_lengthscale = r.f64();
  k.periodic_lengthscale = r.f64();
  k.period = r.f64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) k.children.push_back(read_kernel(r));
  return k;
}

}  // namespace

bool parse_family(const std::string& s, tasks::Family& out) {
  using tasks::Family;
  for (Family f : {Family::kEQ, Family::kMatern52, Family::kWeaklyPeriodic, Family::kSawtooth,
                   Family::kMixture, Family::kRegimeI, Family::kRegimeII, Family::kRegimeIII,
                   Family::kRegimeIV}) {
    if (s == tasks::family_name(f)) {
      out = f;
      return true;
    }
  }
  return false;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ostringstream hdr;
  hdr << "variant=" << models::variant_name(ck.spec.variant) << "\n";
  hdr << "head=" << models::head_name(ck.spec.head) << "\n";
  if (ck.spec.is_relational()) hdr << "comparison=" << comparison_name(ck.spec.comparison) << "\n";
  hdr << "dx=" << ck.spec.d_x << "\n";
  hdr << "dy=" << ck.spec.d_y << "\n";
  hdr << "embed_dim=" << ck.spec.embed_dim << "\n";
  hdr << "enc_depth=" << ck.spec.enc_depth << "\n";
  hdr << "enc_width=" << ck.spec.enc_width << "\n";
  hdr << "dec_depth=" << ck.spec.dec_depth << "\n";
  hdr << "dec_width=" << ck.spec.dec_width << "\n";
  hdr << "d_sigma=" << ck.spec.d_sigma << "\n";
  hdr << "mean_aggregation=" << (ck.spec.mean_aggregation ? 1 : 0) << "\n";
  hdr << "task_family=" << tasks::family_name(ck.family) << "\n";
  hdr << "epochs=" << ck.train_cfg.epochs << "\n";
  hdr << "tasks_per_epoch=" << ck.train_cfg.tasks_per_epoch << "\n";
  hdr << "batch_size=" << ck.train_cfg.batch_size << "\n";
  hdr << "learning_rate=" << fmt_double(ck.train_cfg.learning_rate) << "\n";
  hdr << "validation_tasks=" << ck.train_cfg.validation_tasks << "\n";
  hdr << "normalize_by_targets=" << (ck.train_cfg.normalize_by_targets ? 1 : 0) << "\n";
  hdr << "grad_clip_norm=" << fmt_double(ck.train_cfg.grad_clip_norm) << "\n";
  hdr << "data_seed=" << ck.train_cfg.data_seed << "\n";
  hdr << "validation_seed=" << ck.train_cfg.validation_seed << "\n";
  hdr << "init_seed=" << ck.train_cfg.init_seed << "\n";
  hdr << "best_epoch=" << ck.best_epoch << "\n";
  hdr << "best_val_score=" << fmt_double(ck.best_val_score) << "\n";

  std::string out;
  out.append("RCNP");
  put_u32(out, kCheckpointVersion);
  put_string(out, hdr.str());
  for (std::size_t i = 0; i < ck.params.tensors.size(); ++i) {
    put_string(out, ck.params.names[i]);
    put_tensor(out, ck.params.tensors[i]);
  }
  write_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(read_file(path), path);
  if (r.raw(4) != "RCNP") throw std::runtime_error("not a checkpoint file: " + path);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                             " in " + path);
  }
  const std::string header = r.str();
  std::map<std::string, std::string> kv;
  std::istringstream hs(header);
  std::string line;
  while (std::getline(hs, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto want = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("checkpoint missing key '" + key + "'");
    return it->second;
  };

  Checkpoint ck;
  if (!models::parse_variant(want("variant"), ck.spec.variant)) {
    throw std::runtime_error("checkpoint has unknown variant '" + want("variant") + "'");
  }
  if (!models::parse_head(want("head"), ck.spec.head)) {
    throw std::runtime_error("checkpoint has unknown head '" + want("head") + "'");
  }
  if (kv.count("comparison") && !parse_comparison(kv["comparison"], ck.spec.comparison)) {
    throw std::runtime_error("checkpoint has unknown comparison '" + kv["comparison"] + "'");
  }
  ck.spec.d_x = std::stoul(want("dx"));
  ck.spec.d_y = std::stoul(want("dy"));
  ck.spec.embed_dim = std::stoul(want("embed_dim"));
  ck.spec.enc_depth = std::stoul(want("enc_depth"));
  ck.spec.enc_width = std::stoul(want("enc_width"));
  ck.spec.dec_depth = std::stoul(want("dec_depth"));
  ck.spec.dec_width = std::stoul(want("dec_width"));
  ck.spec.d_sigma = std::stoul(want("d_sigma"));
  ck.spec.mean_aggregation = kv.count("mean_aggregation") && kv["mean_aggregation"] != "0";
  if (!parse_family(want("task_family"), ck.family)) {
    throw std::runtime_error("checkpoint has unknown task family");
  }
  ck.train_cfg.epochs = std::stoul(want("epochs"));
  ck.train_cfg.tasks_per_epoch = std::stoul(want("tasks_per_epoch"));
  ck.train_cfg.batch_size = std::stoul(want("batch_size"));
  ck.train_cfg.learning_rate = std::stod(want("learning_rate"));
  ck.train_cfg.validation_tasks = std::stoul(want("validation_tasks"));
  ck.train_cfg.normalize_by_targets = want("normalize_by_targets") != "0";
  if (kv.count("grad_clip_norm")) ck.train_cfg.grad_clip_norm = std::stod(kv["grad_clip_norm"]);
  ck.train_cfg.data_seed = std::stoull(want("data_seed"));
  ck.train_cfg.validation_seed = std::stoull(want("validation_seed"));
  ck.train_cfg.init_seed = std::stoull(want("init_seed"));
  ck.best_epoch = std::stoul(want("best_epoch"));
  ck.best_val_score = std::stod(want("best_val_score"));

  while (!r.at_end()) {
    ck.params.names.push_back(r.str());
    ck.params.tensors.push_back(r.tensor());
  }
  ck.spec.validate();
  return ck;
}

void save_tasks(const std::string& path, const std::vector<tasks::Task>& ts) {
  std::string out;
  out.append("RCTK");
  put_u32(out, 1);
  put_u64(out, ts.size());
  for (const tasks::Task& t : ts) {
    put_u64(out, t.seed);
    put_string(out, t.generator);
    out.push_back(t.has_reference ? 1 : 0);
    if (t.has_reference) {
      put_kernel(out, t.reference_kernel);
      put_f64(out, t.reference_noise);
    }
    put_tensor(out, t.context_x);
    put_tensor(out, t.context_y);
    put_tensor(out, t.target_x);
    put_tensor(out, t.target_y);
  }
  write_file(path, out);
}

std::vector<tasks::Task> load_tasks(const std::string& path) {
  Reader r(read_file(path), path);
  if (r.raw(4) != "RCTK") throw std::runtime_error("not a task file: " + path);
  const std::uint32_t version = r.u32();
  if (version != 1) throw std::runtime_error("unsupported task file version");
  const std::uint64_t count = r.u64();
  std::vector<tasks::Task> ts(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    tasks::Task& t = ts[i];
    t.seed = r.u64();
    t.generator = r.str();
    t.has_reference = r.u8() != 0;
    if (t.has_reference) {
      t.reference_kernel = read_kernel(r);
      t.reference_noise = r.f64();
    }
    t.context_x = r.tensor();
    t.context_y = r.tensor();
    t.target_x = r.tensor();
    t.target_y = r.tensor();
  }
  return ts;
}

}  // namespace rcnp::cli
