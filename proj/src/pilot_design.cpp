#include "jadce/pilot_design.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "jadce/random.hpp"

namespace jadce {

CMatrix hadamard_basis(Index length) {
  require(length >= 1 && std::has_single_bit(static_cast<std::uint64_t>(length)),
          "hadamard_basis: L=" + std::to_string(length) +
              " is not a power of two (Sylvester construction)");
  CMatrix b(length, length);
  const Complex unit(1.0, 1.0);
  for (Index i = 0; i < length; ++i)
    for (Index j = 0; j < length; ++j) {
      const int parity = std::popcount(static_cast<std::uint64_t>(i & j)) & 1;
      b(i, j) = parity ? -unit : unit;
    }
  return b;
}

BasisMatrix partition_basis(CMatrix basis, std::vector<Index> kappa) {
  require(!kappa.empty(), "partition_basis: no clusters");
  Index total = 0;
  for (Index k : kappa) {
    require(k >= 1, "partition_basis: every kappa_g must be >= 1");
    total += k;
  }
  require(total <= basis.cols(),
          "partition_basis: sum(kappa)=" + std::to_string(total) +
              " exceeds L=" + std::to_string(basis.cols()));
  BasisMatrix out;
  out.entries = std::move(basis);
  out.offsets.reserve(kappa.size());
  Index offset = 0;
  for (Index k : kappa) {
    out.offsets.push_back(offset);
    offset += k;
  }
  out.kappa = std::move(kappa);
  return out;
}

std::vector<Index> equal_kappa(Index length, Index clusters) {
  require(clusters >= 1 && clusters <= length,
          "equal_kappa: need 1 <= G <= L");
  std::vector<Index> kappa(clusters, length / clusters);
  for (Index g = 0; g < length % clusters; ++g) ++kappa[g];
  return kappa;
}

double chordal_distance(const CVector& a, const CVector& b) {
  const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

double mutual_coherence(const CMatrix& pilots) {
  const RVector norms = pilots.colwise().norm().transpose();
  for (Index j = 0; j < norms.size(); ++j)
    require(norms(j) > 0.0,
            "mutual_coherence: column " + std::to_string(j) + " is zero");
  if (pilots.cols() < 2) return 0.0;
  const CMatrix unit = pilots * norms.cwiseInverse().asDiagonal();
  const CMatrix gram = unit.adjoint() * unit;
  double best = 0.0;
  for (Index j = 0; j < gram.cols(); ++j)
    for (Index i = 0; i < j; ++i) best = std::max(best, std::abs(gram(i, j)));
  return std::min(best, 1.0);
}

double candidate_count(Index kappa, Index cardinality, int phase_order) {
  if (cardinality < 1 || cardinality > kappa) return 0.0;
  double binom = 1.0;
  for (Index i = 0; i < cardinality; ++i)
    binom = binom * static_cast<double>(kappa - i) / static_cast<double>(i + 1);
  return std::round(binom) *
         std::pow(static_cast<double>(phase_order),
                  static_cast<double>(cardinality - 1));
}

namespace {

constexpr int kMaxPhaseOrder = 64;

// A candidate is a sorted support plus one phase index per nonzero; the
// first phase index is always 0 so that z and e^{j theta} z are not both drawn.
struct Candidate {
  std::vector<Index> support;
  std::vector<int> phase;
  auto operator<=>(const Candidate&) const = default;
};

CVector weight_vector(const Candidate& c, Index kappa, int phase_order) {
  CVector z = CVector::Zero(kappa);
  static const Complex quarter[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (std::size_t i = 0; i < c.support.size(); ++i) {
    const int p = c.phase[i];
    if ((4 * p) % phase_order == 0) {
      z(c.support[i]) = quarter[(4 * p) / phase_order];
    } else {
      z(c.support[i]) = std::polar(
          1.0, 2.0 * std::numbers::pi * p / static_cast<double>(phase_order));
    }
  }
  return z;
}

std::vector<Candidate> enumerate_candidates(Index kappa, Index cardinality,
                                            int phase_order) {
  std::vector<Candidate> out;
  std::vector<Index> support(cardinality);
  std::iota(support.begin(), support.end(), Index{0});
  while (true) {
    std::vector<int> phase(cardinality, 0);
    while (true) {
      out.push_back({support, phase});
      // odometer over phase[1..]
      Index k = cardinality - 1;
      while (k >= 1 && ++phase[k] == phase_order) phase[k--] = 0;
      if (k < 1) break;
    }
    // next combination in lexicographic order
    Index i = cardinality - 1;
    while (i >= 0 && support[i] == kappa - cardinality + i) --i;
    if (i < 0) break;
    ++support[i];
    for (Index j = i + 1; j < cardinality; ++j) support[j] = support[j - 1] + 1;
  }
  return out;
}

std::vector<Candidate> sample_candidates(Index kappa, Index cardinality,
                                         int phase_order, Index pool_size,
                                         Rng& rng) {
  std::set<Candidate> seen;
  std::vector<Candidate> out;
  out.reserve(pool_size);
  std::vector<Index> all(kappa);
  std::iota(all.begin(), all.end(), Index{0});
  std::uniform_int_distribution<int> phase_dist(0, phase_order - 1);
  while (static_cast<Index>(out.size()) < pool_size) {
    // partial Fisher-Yates for a random support
    for (Index i = 0; i < cardinality; ++i) {
      std::uniform_int_distribution<Index> pick(i, kappa - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    Candidate c;
    c.support.assign(all.begin(), all.begin() + cardinality);
    std::sort(c.support.begin(), c.support.end());
    c.phase.assign(cardinality, 0);
    for (Index i = 1; i < cardinality; ++i) c.phase[i] = phase_dist(rng);
    if (seen.insert(c).second) out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

ClusterPilots generate_cluster_pilots(const CMatrix& basis_block, Index count,
                                      Index cardinality, Index pool_size,
                                      std::uint64_t seed) {
  const Index kappa = basis_block.cols();
  require(count >= 1, "generate_cluster_pilots: N_g must be >= 1");
  require(cardinality >= 1 && cardinality <= kappa,
          "generate_cluster_pilots: cardinality s=" + std::to_string(cardinality) +
              " outside [1, kappa=" + std::to_string(kappa) + "]");
  require(pool_size >= count, "generate_cluster_pilots: pool_size=" +
                                  std::to_string(pool_size) + " < N_g=" +
                                  std::to_string(count));

  int phase_order = 1;
  while (phase_order <= kMaxPhaseOrder &&
         candidate_count(kappa, cardinality, phase_order) < static_cast<double>(count))
    phase_order *= 2;
  if (phase_order > kMaxPhaseOrder) {
    std::ostringstream msg;
    msg << "generate_cluster_pilots: only "
        << candidate_count(kappa, cardinality, kMaxPhaseOrder)
        << " distinct weight vectors (kappa=" << kappa << ", s=" << cardinality
        << ", widest alphabet " << kMaxPhaseOrder << "-PSK) for N_g=" << count;
    throw std::invalid_argument(msg.str());
  }

  Rng rng(seed);
  const double available = candidate_count(kappa, cardinality, phase_order);
  std::vector<Candidate> pool =
      available <= static_cast<double>(pool_size)
          ? enumerate_candidates(kappa, cardinality, phase_order)
          : sample_candidates(kappa, cardinality, phase_order, pool_size, rng);
  const Index n_pool = static_cast<Index>(pool.size());

  CMatrix cand(basis_block.rows(), n_pool);
  for (Index k = 0; k < n_pool; ++k) {
    CVector v = basis_block * weight_vector(pool[k], kappa, phase_order);
    cand.col(k) = v / v.norm();
  }

  // max |<c_k, selected>|^2 per candidate; distance^2 = 1 - this
  RVector max_overlap = RVector::Zero(n_pool);
  std::vector<bool> taken(n_pool, false);
  std::vector<Index> order;
  order.reserve(count);
  double min_distance = 1.0;

  std::uniform_int_distribution<Index> first(0, n_pool - 1);
  Index next = first(rng);
  while (true) {
    taken[next] = true;
    order.push_back(next);
    if (order.size() > 1)
      min_distance = std::min(min_distance,
                              std::sqrt(std::max(0.0, 1.0 - max_overlap(next))));
    if (static_cast<Index>(order.size()) == count) break;
    const CVector overlap = cand.adjoint() * cand.col(next);
    max_overlap = max_overlap.cwiseMax(overlap.cwiseAbs2());
    double best = 2.0;
    next = -1;
    for (Index k = 0; k < n_pool; ++k)
      if (!taken[k] && max_overlap(k) < best) {
        best = max_overlap(k);
        next = k;
      }
  }

  ClusterPilots out;
  out.pilots.resize(basis_block.rows(), count);
  out.weights.reserve(count);
  for (Index n = 0; n < count; ++n) {
    out.pilots.col(n) = cand.col(order[n]);
    out.weights.push_back(weight_vector(pool[order[n]], kappa, phase_order));
  }
  out.min_distance = count > 1 ? min_distance : 1.0;
  out.phase_order = phase_order;
  out.pool_size = n_pool;
  return out;
}

PilotBank build_pilot_bank(const PilotBankConfig& config) {
  require(!config.cluster_sizes.empty(), "build_pilot_bank: no clusters");
  const Index clusters = static_cast<Index>(config.cluster_sizes.size());
  std::vector<Index> kappa =
      config.kappa.empty() ? equal_kappa(config.length, clusters) : config.kappa;
  require(static_cast<Index>(kappa.size()) == clusters,
          "build_pilot_bank: kappa has " + std::to_string(kappa.size()) +
              " entries for " + std::to_string(clusters) + " clusters");
  require(config.pool_factor >= 1, "build_pilot_bank: pool_factor must be >= 1");

  PilotBank bank;
  bank.basis = partition_basis(hadamard_basis(config.length), std::move(kappa));
  bank.cluster_sizes = config.cluster_sizes;
  bank.seed = config.seed;
  const Index n_total =
      std::accumulate(config.cluster_sizes.begin(), config.cluster_sizes.end(), Index{0});
  bank.pilots.resize(config.length, n_total);
  bank.cluster_of.reserve(n_total);
  bank.weights.reserve(n_total);

  Index offset = 0;
  for (Index g = 0; g < clusters; ++g) {
    const Index n_g = config.cluster_sizes[g];
    require(n_g >= 1, "build_pilot_bank: empty cluster " + std::to_string(g));
    const Index kappa_g = bank.basis.kappa[g];
    Index s = config.cardinality > 0 ? std::min(config.cardinality, kappa_g)
                                     : (kappa_g + 1) / 2;
    // default cardinality grows when even the widest alphabet is too small,
    // e.g. kappa_g = 2 leaves only two single-column supports
    if (config.cardinality == 0)
      while (s < kappa_g &&
             candidate_count(kappa_g, s, kMaxPhaseOrder) < static_cast<double>(n_g))
        ++s;
    ClusterPilots cp = generate_cluster_pilots(
        bank.basis.block(g), n_g, s, config.pool_factor * n_g,
        derive_seed(config.seed, {stream::pilots, static_cast<std::uint64_t>(g)}));
    bank.pilots.middleCols(offset, n_g) = cp.pilots;
    bank.cluster_offsets.push_back(offset);
    for (Index n = 0; n < n_g; ++n) {
      bank.cluster_of.push_back(g);
      bank.weights.push_back(std::move(cp.weights[n]));
    }
    bank.cardinality.push_back(s);
    bank.phase_order.push_back(cp.phase_order);
    bank.min_distance.push_back(cp.min_distance);
    offset += n_g;
  }
  return bank;
}

}  // namespace jadce
