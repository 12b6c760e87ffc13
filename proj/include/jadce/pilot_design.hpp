#pragma once

#include <cstdint>
#include <vector>

#include "jadce/linalg.hpp"

namespace jadce {

/// Complex Hadamard basis split into contiguous per-cluster column blocks.
struct BasisMatrix {
  CMatrix entries;             // L x L, entries (1+j) * (+-1)
  std::vector<Index> kappa;    // columns per cluster
  std::vector<Index> offsets;  // first column of each cluster block

  Index length() const { return entries.rows(); }
  Index clusters() const { return static_cast<Index>(kappa.size()); }
  CMatrix block(Index g) const { return entries.middleCols(offsets[g], kappa[g]); }
};

/// (1+j) * H_L with H_L the Sylvester-Hadamard matrix. L must be a power of two.
CMatrix hadamard_basis(Index length);

/// Assign contiguous column ranges of `basis` to clusters in order.
BasisMatrix partition_basis(CMatrix basis, std::vector<Index> kappa);

/// kappa_g = L / G with the remainder spread over the first clusters.
std::vector<Index> equal_kappa(Index length, Index clusters);

/// Chordal distance sqrt(1 - |a^H b|^2) between normalized a and b.
double chordal_distance(const CVector& a, const CVector& b);

/// Max normalized inner product between distinct columns. Throws on a zero column.
double mutual_coherence(const CMatrix& pilots);

struct ClusterPilots {
  CMatrix pilots;                // L x N_g, unit-norm columns
  std::vector<CVector> weights;  // combining weights z_n, length kappa_g
  double min_distance = 0.0;     // min pairwise chordal distance of the selection
  int phase_order = 1;           // 1: {0,1}; 2: {0,+-1}; q: {0} u q-PSK
  Index pool_size = 0;           // candidates actually considered
};

/// Number of distinct sparse weight vectors with `cardinality` nonzeros drawn
/// from the q-PSK alphabet, up to a global phase (first nonzero fixed to 1).
double candidate_count(Index kappa, Index cardinality, int phase_order);

/// Greedy farthest-point selection of `count` pilots s = B_g z / |B_g z| from a
/// random pool of weight vectors of fixed cardinality. The alphabet is widened
/// from binary to {0,+-1} and then to larger PSK sets until the pool can hold
/// `count` distinct directions.
ClusterPilots generate_cluster_pilots(const CMatrix& basis_block, Index count,
                                      Index cardinality, Index pool_size,
                                      std::uint64_t seed);

struct PilotBankConfig {
  Index length = 64;
  std::vector<Index> cluster_sizes;  // N_g per cluster
  std::vector<Index> kappa;          // empty: equal split of the basis
  Index cardinality = 0;             // 0: ceil(kappa_g / 2), raised if too few candidates
  Index pool_factor = 20;            // pool_size = pool_factor * N_g
  std::uint64_t seed = 1;
};

struct PilotBank {
  BasisMatrix basis;
  CMatrix pilots;                        // L x N, clusters stored contiguously
  std::vector<Index> cluster_of;         // device -> cluster
  std::vector<Index> cluster_offsets;    // first device of each cluster
  std::vector<Index> cluster_sizes;
  std::vector<CVector> weights;          // per device
  std::vector<Index> cardinality;        // per cluster
  std::vector<int> phase_order;          // per cluster
  std::vector<double> min_distance;      // per cluster
  std::uint64_t seed = 0;

  Index length() const { return pilots.rows(); }
  Index devices() const { return pilots.cols(); }
  Index clusters() const { return static_cast<Index>(cluster_sizes.size()); }
  CMatrix cluster_pilots(Index g) const {
    return pilots.middleCols(cluster_offsets[g], cluster_sizes[g]);
  }
};

PilotBank build_pilot_bank(const PilotBankConfig& config);

}  // namespace jadce
