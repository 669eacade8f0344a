#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "tollopt/demand.hpp"
#include "tollopt/guidance.hpp"
#include "tollopt/network.hpp"
#include "tollopt/rng.hpp"
#include "tollopt/toll_schedule.hpp"

namespace tollopt {

using Path = std::vector<LinkIndex>;

class RouteChoiceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PathSet {
  OdPair od;
  std::vector<Path> paths;
  std::vector<double> path_sizes;       // PS_k in (0, 1]
  std::vector<double> composite_utils;  // C_k

  std::size_t size() const { return paths.size(); }
};

/// Logit coefficients; both are disutilities and must be negative.
struct ChoiceCoefficients {
  double beta_cost = -0.4;   // per currency unit
  double beta_time = -0.01;  // per second
};

/// Up to k_max loop-free paths in increasing free-flow time. Each accepted
/// path spawns candidates by banning one of its links on top of the links
/// its parent banned, which reaches every loop-free path eventually.
PathSet enumerate_paths(const Network& network, const OdPair& od, std::size_t k_max);

/// Length-weighted path size: sum over links of (l_a / L_k) / N_a, where N_a
/// counts the paths in the set that use link a.
std::vector<double> path_size(const PathSet& path_set, const Network& network);

/// Systematic utility of travelling `links` starting at `departure`: tolls
/// and link times are read at each link's estimated entry time, obtained by
/// accumulating the times along the path.
double path_utility(const Network& network, std::span<const LinkIndex> links, double path_size,
                    double composite, const TollSchedule& tolls, const GuidanceTable& times,
                    const ChoiceCoefficients& coeffs, double departure);

std::vector<double> utilities(const PathSet& path_set, const Network& network,
                              const TollSchedule& tolls, const GuidanceTable& guidance,
                              const ChoiceCoefficients& coeffs, double departure);

/// Multinomial logit probabilities, max-shifted.
std::vector<double> choice_probabilities(std::span<const double> utilities);

template <class URBG>
std::size_t sample_choice(std::span<const double> probabilities, URBG& rng) {
  if (probabilities.empty()) throw RouteChoiceError("cannot sample from an empty choice set");
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (std::size_t k = 0; k + 1 < probabilities.size(); ++k) {
    cumulative += probabilities[k];
    if (u < cumulative) return k;
  }
  return probabilities.size() - 1;
}

/// Choice sets for every OD pair of interest.
class PathCatalog {
 public:
  PathCatalog() = default;

  static PathCatalog enumerate(const Network& network, const std::vector<OdPair>& pairs,
                               std::size_t k_max);
  /// Rows of `origin,destination,path_id,links,composite`; `links` is a
  /// space-separated list of link ids.
  static PathCatalog load(const std::filesystem::path& path, const Network& network);

  void add(PathSet set);
  const PathSet& at(const OdPair& od) const;
  bool contains(const OdPair& od) const { return sets_.contains(od); }
  const std::map<OdPair, PathSet>& sets() const { return sets_; }

 private:
  std::map<OdPair, PathSet> sets_;
};

}  // namespace tollopt
