#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spikegrad {

// Threshold reached tangentially: the crossing slope vanishes and spike-time
// derivatives are undefined.
class DegenerateCrossing : public std::runtime_error {
 public:
  DegenerateCrossing(std::size_t layer, std::size_t neuron, double time, double slope)
      : std::runtime_error("degenerate threshold crossing at layer " + std::to_string(layer) +
                           " neuron " + std::to_string(neuron) + " t=" + std::to_string(time) +
                           " ms (slope " + std::to_string(slope) + ")"),
        layer(layer), neuron(neuron), time(time), slope(slope) {}

  std::size_t layer;
  std::size_t neuron;
  double time;
  double slope;
};

class RootNotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backward pass hit a spike whose crossing denominator is (near) zero.
class DegenerateDenominator : public std::runtime_error {
 public:
  DegenerateDenominator(std::size_t spike, std::size_t layer, std::size_t neuron, double value)
      : std::runtime_error("degenerate crossing denominator " + std::to_string(value) + " at spike #" +
                           std::to_string(spike) + " (layer " + std::to_string(layer) + ", neuron " +
                           std::to_string(neuron) + ")"),
        spike(spike), layer(layer), neuron(neuron), value(value) {}

  std::size_t spike;
  std::size_t layer;
  std::size_t neuron;
  double value;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spikegrad
