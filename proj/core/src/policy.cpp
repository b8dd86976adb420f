#include "deephedge/policy.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "deephedge/errors.hpp"
#include "deephedge/rng.hpp"

namespace deephedge::nn {

namespace {

constexpr std::string_view kMagic = "deephedge-checkpoint";
constexpr int kFormatVersion = 1;
constexpr std::uint64_t kInitSalt = 0x696e6974;  // "init"

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError(fmt::format("checkpoint: bad number '{}'", text));
  }
  return value;
}

std::int64_t parse_int(std::string_view text) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(fmt::format("checkpoint: bad integer '{}'", text));
  }
  return value;
}

std::uint64_t parse_uint(std::string_view text) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(fmt::format("checkpoint: bad integer '{}'", text));
  }
  return value;
}

std::string join_layers(std::span<const int> layers) {
  std::string out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(layers[i]);
  }
  return out;
}

std::vector<int> split_layers(std::string_view text) {
  std::vector<int> layers;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    layers.push_back(static_cast<int>(parse_int(piece)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return layers;
}

}  // namespace

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError(fmt::format("unknown activation '{}'", name));
}

std::size_t parameter_count(std::span<const int> layers) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    n += static_cast<std::size_t>(layers[l]) * static_cast<std::size_t>(layers[l + 1]) +
         static_cast<std::size_t>(layers[l + 1]);
  }
  return n;
}

void PolicyParams::validate() const {
  if (layers.size() < 2) throw ContractViolation("policy: need at least input and output layers");
  for (int width : layers) {
    if (width < 1) throw ContractViolation("policy: layer widths must be >= 1");
  }
  if (layers.back() != 1) throw ContractViolation("policy: output layer must have one unit");
  if (theta.size() != parameter_count(layers)) {
    throw ContractViolation(fmt::format("policy: theta has {} entries, architecture needs {}",
                                        theta.size(), parameter_count(layers)));
  }
  for (double w : theta) {
    if (!std::isfinite(w)) throw ContractViolation("policy: theta has a non-finite entry");
  }
}

PolicyParams init_policy(std::vector<int> layers, Activation activation, std::uint64_t seed) {
  PolicyParams p;
  p.layers = std::move(layers);
  p.activation = activation;
  p.theta.assign(parameter_count(p.layers), 0.0);
  NormalStream rng(substream_seed(seed, 0, kInitSalt));
  std::size_t offset = 0;
  const std::size_t n_layers = p.layers.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto in = static_cast<std::size_t>(p.layers[l]);
    const auto out = static_cast<std::size_t>(p.layers[l + 1]);
    const std::size_t count = in * out + out;
    if (l + 1 < n_layers) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      for (std::size_t i = 0; i < count; ++i) {
        p.theta[offset + i] = bound * (2.0 * rng.uniform() - 1.0);
      }
    }
    offset += count;
  }
  p.validate();
  return p;
}

double ffnn_forward(const PolicyParams& params, std::span<const double> features) {
  if (features.size() != static_cast<std::size_t>(params.layers.front())) {
    throw ContractViolation("ffnn_forward: feature size does not match the input layer");
  }
  Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(features.data(),
                                                        static_cast<Eigen::Index>(features.size()));
  std::size_t offset = 0;
  const std::size_t n_layers = params.layers.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Eigen::Index in = params.layers[l];
    const Eigen::Index out = params.layers[l + 1];
    Eigen::Map<const RowMajor> w(params.theta.data() + offset, out, in);
    Eigen::Map<const Eigen::VectorXd> b(params.theta.data() + offset + out * in, out);
    offset += static_cast<std::size_t>(out * in + out);
    Eigen::VectorXd z = w * h + b;
    if (l + 1 < n_layers) {
      if (params.activation == Activation::relu) {
        z = z.cwiseMax(0.0);
      } else {
        z = z.array().tanh().matrix();
      }
    }
    h = std::move(z);
  }
  return h(0);
}

TapePolicy::TapePolicy(ad::Tape& tape, const PolicyParams& params) : activation_(params.activation) {
  params.validate();
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < params.layers.size(); ++l) {
    const Eigen::Index in = params.layers[l];
    const Eigen::Index out = params.layers[l + 1];
    ad::Matrix w = Eigen::Map<const RowMajor>(params.theta.data() + offset, out, in);
    ad::Matrix b = Eigen::Map<const Eigen::VectorXd>(params.theta.data() + offset + out * in, out);
    offset += static_cast<std::size_t>(out * in + out);
    weights_.push_back(tape.parameter(std::move(w)));
    biases_.push_back(tape.parameter(std::move(b)));
  }
}

ad::Var TapePolicy::forward(ad::Var features) const {
  ad::Var h = features;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = ad::affine(weights_[l], h, biases_[l]);
    if (l + 1 < weights_.size()) {
      h = activation_ == Activation::relu ? ad::pos_part(h) : ad::tanh(h);
    }
  }
  return h;
}

std::vector<double> TapePolicy::flatten(const ad::Gradients& grads) const {
  std::vector<double> flat;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const ad::Matrix gw = grads.wrt(weights_[l]);
    const ad::Matrix gb = grads.wrt(biases_[l]);
    for (Eigen::Index r = 0; r < gw.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw.cols(); ++c) flat.push_back(gw(r, c));
    }
    for (Eigen::Index r = 0; r < gb.rows(); ++r) flat.push_back(gb(r, 0));
  }
  return flat;
}

const std::string* Checkpoint::find(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return &v;
  }
  return nullptr;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  ckpt.policy.validate();
  const auto& p = ckpt.policy;
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "architecture " << join_layers(p.layers) << '\n';
  out << "activation " << to_string(p.activation) << '\n';
  out << "step_count " << ckpt.adam.step_count << '\n';
  out << "seed " << ckpt.seed << '\n';
  out << fmt::format("adam {:.17g} {:.17g} {:.17g} {:.17g}\n", ckpt.adam.lr, ckpt.adam.beta1,
                     ckpt.adam.beta2, ckpt.adam.eps);
  for (const auto& [key, value] : ckpt.metadata) {
    if (key.find_first_of(" \n") != std::string::npos || value.find('\n') != std::string::npos) {
      throw ContractViolation("checkpoint metadata must be single-token keys and one-line values");
    }
    out << "meta " << key << ' ' << value << '\n';
  }
  auto block = [&out](std::string_view name, const std::vector<double>& values) {
    out << name << ' ' << values.size() << '\n';
    for (double x : values) out << fmt::format("{:.17g}\n", x);
  };
  const std::size_t n = p.theta.size();
  block("theta", p.theta);
  block("m", ckpt.adam.m.empty() ? std::vector<double>(n, 0.0) : ckpt.adam.m);
  block("v", ckpt.adam.v.empty() ? std::vector<double>(n, 0.0) : ckpt.adam.v);
}

Checkpoint read_checkpoint(std::istream& in) {
  Checkpoint ckpt;
  std::string line;
  auto next_line = [&]() -> std::string_view {
    if (!std::getline(in, line)) throw ConfigError("checkpoint: unexpected end of file");
    return line;
  };
  auto split = [](std::string_view text) {
    const auto space = text.find(' ');
    if (space == std::string_view::npos) return std::pair{text, std::string_view{}};
    return std::pair{text.substr(0, space), text.substr(space + 1)};
  };

  {
    auto [magic, version] = split(next_line());
    if (magic != kMagic) throw ConfigError("checkpoint: not a deephedge checkpoint");
    if (parse_int(version) != kFormatVersion) {
      throw ConfigError(fmt::format("checkpoint: unsupported version {}", version));
    }
  }
  auto read_block = [&](std::string_view expected) {
    auto [name, count] = split(line);
    if (name != expected) throw ConfigError(fmt::format("checkpoint: expected '{}' block", expected));
    const auto n = static_cast<std::size_t>(parse_uint(count));
    std::vector<double> values;
    values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) values.push_back(parse_double(next_line()));
    return values;
  };

  while (true) {
    auto [key, rest] = split(next_line());
    if (key == "architecture") {
      ckpt.policy.layers = split_layers(rest);
    } else if (key == "activation") {
      ckpt.policy.activation = parse_activation(rest);
    } else if (key == "step_count") {
      ckpt.adam.step_count = parse_int(rest);
    } else if (key == "seed") {
      ckpt.seed = parse_uint(rest);
    } else if (key == "adam") {
      std::istringstream fields{std::string(rest)};
      std::string lr, b1, b2, eps;
      fields >> lr >> b1 >> b2 >> eps;
      ckpt.adam.lr = parse_double(lr);
      ckpt.adam.beta1 = parse_double(b1);
      ckpt.adam.beta2 = parse_double(b2);
      ckpt.adam.eps = parse_double(eps);
    } else if (key == "meta") {
      auto [mk, mv] = split(rest);
      ckpt.metadata.emplace_back(std::string(mk), std::string(mv));
    } else if (key == "theta") {
      break;
    } else {
      throw ConfigError(fmt::format("checkpoint: unknown header line '{}'", line));
    }
  }
  ckpt.policy.theta = read_block("theta");
  next_line();
  ckpt.adam.m = read_block("m");
  next_line();
  ckpt.adam.v = read_block("v");
  try {
    ckpt.policy.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
  if (ckpt.adam.m.size() != ckpt.policy.theta.size() || ckpt.adam.v.size() != ckpt.policy.theta.size()) {
    throw ConfigError("checkpoint: optimizer moments do not match theta");
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::filesystem::path fs_path(path);
  if (fs_path.has_parent_path()) std::filesystem::create_directories(fs_path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingCheckpoint("checkpoint not found: " + path);
  return read_checkpoint(in);
}

}  // namespace deephedge::nn
