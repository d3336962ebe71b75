#pragma once

/// Analytics for an observer who knows the terminal log-price vector in
/// advance: when that knowledge pins the next jump time exactly, bracketing
/// bounds when it does not, the posterior it induces over future state
/// skeletons, and the compensator (atoms plus an estimated continuous
/// hazard) of the next jump under that posterior.

#include "mcmarket/model.hpp"
#include "mcmarket/rng.hpp"
#include "mcmarket/scenario.hpp"
#include "mcmarket/simulate.hpp"

#include <vector>

namespace mcmarket {

/// What the terminal increment over a residual window says about the first
/// sojourn time of a candidate continuation scenario (length >= 1).
struct FirstSojournInfo {
    bool consistent = false;    ///< target lies in the increment hull (closed, tol band)
    double hull_distance = 0.0; ///< Chebyshev distance to the hull
    double interior_margin = 0.0;  ///< >0 when the sojourn polytope has interior
    double lo = 0.0;            ///< bounds of the first sojourn over the polytope
    double hi = 0.0;
    int support_dim = -1;       ///< affine dimension of the increment set
    int tail_dim = -1;          ///< same for the continuation after its first jump
    bool determined = false;    ///< first sojourn pinned to a single value
    double value = 0.0;         ///< that value, when determined
};

FirstSojournInfo first_sojourn_info(const MarketModel& model, const Scenario& g,
                                    double window, const Eigen::VectorXd& target_increment,
                                    double tol = 1e-9);

/// Classification of each realized jump given the terminal log-price vector:
/// bracketing bounds from the suffix polytope, whether the increment
/// dimension drops at the jump, and the announced time when it is pinned.
struct JumpClassification {
    int k = 0;              ///< jump number, 1-based
    double lower = 0.0;     ///< earliest time consistent with the information
    double upper = 0.0;     ///< latest
    bool dim_drop = false;  ///< increment dimension falls by one at this jump
    bool determined = false;
    double announced = 0.0; ///< pinned jump time when determined
};

std::vector<JumpClassification> classify_jumps(const MarketModel& model,
                                               const PathRecord& path,
                                               const Eigen::VectorXd& ell,
                                               double tol = 1e-9);

// ===== continuation posterior ==============================================

struct PosteriorOptions {
    int max_jumps = 8;          ///< continuation enumeration cap
    double atom_tol = 1e-9;     ///< matching tolerance for point-mass increments
    double support_tol = 1e-12; ///< interior-margin threshold for continuous support
    int density_samples = 4096; ///< draws behind each density estimate
};

struct ContinuationWeight {
    Scenario g;              ///< continuation from the conditioning state (length 0 = stop)
    double pi = 0.0;         ///< probability of the skeleton over the window
    double density = 0.0;    ///< terminal-increment density at the target (1 for atoms)
    double weight = 0.0;     ///< normalized posterior mass
    int dim = 0;             ///< increment dimension of g
    FirstSojournInfo first;  ///< first-sojourn analysis (length >= 1 only)
};

struct Posterior {
    bool atomic = false;   ///< target matched point-mass continuations exactly
    int dim = -1;          ///< dimension stratum carrying the posterior
    double stop_weight = 0.0;  ///< mass of the no-further-jump continuation
    std::vector<ContinuationWeight> entries;  ///< weights sum to 1
};

/// Posterior over continuations from `state`, given that the log-price
/// increment over the residual window equals `target_increment`. Point-mass
/// continuations matching the target dominate everything else; otherwise
/// weights combine skeleton probabilities with estimated increment densities
/// on the lowest-dimension stratum that supports the target.
Posterior continuation_posterior(const MarketModel& model, int state, double window,
                                 const Eigen::VectorXd& target_increment,
                                 const PosteriorOptions& opt, Rng& rng);

// ===== next-jump compensator ===============================================

struct CompensatorAtom {
    double time = 0.0;  ///< within the window (relative)
    double mass = 0.0;
    std::vector<int> targets;  ///< states the pinned jump can move to
};

struct HazardBin {
    double t_lo = 0.0, t_hi = 0.0;
    double hazard = 0.0;   ///< estimated jump intensity on the bin
    double se = 0.0;
    double exposure = 0.0; ///< weighted time at risk accumulated in the bin
};

/// Law of the next jump time under the continuation posterior, split into
/// predictable atoms and an estimated continuous hazard. Masses satisfy
/// atom_mass + continuous_mass = 1 - stop_mass up to Monte Carlo error.
struct MixtureCompensator {
    std::vector<CompensatorAtom> atoms;
    std::vector<HazardBin> bins;
    double atom_mass = 0.0;
    double continuous_mass = 0.0;
    double stop_mass = 0.0;
};

MixtureCompensator next_jump_compensator(const MarketModel& model, int state,
                                         double window,
                                         const Eigen::VectorXd& target_increment,
                                         int n_bins, const PosteriorOptions& opt,
                                         Rng& rng);

}  // namespace mcmarket
