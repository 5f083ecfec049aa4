#include "herlab/random.hpp"

#include <boost/random/beta_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <stdexcept>

namespace herlab {

double uniform01(Engine& rng) {
  boost::random::uniform_01<double> dist;
  return dist(rng);
}

double standard_normal(Engine& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

double beta_sample(Engine& rng, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("beta_sample: parameters must be positive");
  }
  boost::random::beta_distribution<double> dist(alpha, beta);
  return dist(rng);
}

std::size_t uniform_index(Engine& rng, std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("uniform_index: empty range");
  }
  boost::random::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(rng);
}

}  // namespace herlab
