#pragma once

// Feedforward hedging policy f_theta: state features -> next position.
//
// theta is one flat vector. Layer l (in_l -> out_l) stores its weight matrix
// row-major (out_l x in_l) followed by its bias (out_l). Hidden layers use the
// configured activation, the output layer is the identity.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deephedge/adam.hpp"
#include "deephedge/autodiff.hpp"

namespace deephedge::nn {

enum class Activation { relu, tanh };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct PolicyParams {
  std::vector<int> layers;  // e.g. {6, 64, 64, 64, 1}
  Activation activation = Activation::relu;
  std::vector<double> theta;

  // Throws ContractViolation on a malformed architecture or theta size.
  void validate() const;
};

std::size_t parameter_count(std::span<const int> layers);

// Hidden layers: weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
// Output layer: all zeros, so the initial policy is X = 0.
PolicyParams init_policy(std::vector<int> layers, Activation activation, std::uint64_t seed);

double ffnn_forward(const PolicyParams& params, std::span<const double> features);

// Parameters of a policy bound to a tape as leaves.
class TapePolicy {
 public:
  TapePolicy(ad::Tape& tape, const PolicyParams& params);

  // features: in x N; returns 1 x N.
  ad::Var forward(ad::Var features) const;
  // d loss / d theta in the flat layout.
  std::vector<double> flatten(const ad::Gradients& grads) const;

 private:
  std::vector<ad::Var> weights_;
  std::vector<ad::Var> biases_;
  Activation activation_;
};

// Versioned text checkpoint: header lines, then theta, m and v with 17
// significant digits, one value per line.
struct Checkpoint {
  PolicyParams policy;
  AdamState adam;
  std::uint64_t seed = 0;
  // Free-form key/value pairs (training configuration), kept in order.
  std::vector<std::pair<std::string, std::string>> metadata;

  const std::string* find(std::string_view key) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
// Throws MissingCheckpoint when the file does not exist.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace deephedge::nn
