////////////////////////////////////////////////////////////////////////////////
//                                                                            //
//  This file is part of rsf, a toolkit for R-symmetric Fock spaces and       //
//  factorizing scattering data.                                              //
//                                                                            //
//  Licensed under the Apache License, Version 2.0 (the "License");           //
//  you may not use this file except in compliance with the License.          //
//  You may obtain a copy of the License at                                   //
//                                                                            //
//      http://www.apache.org/licenses/LICENSE-2.0                            //
//                                                                            //
//  Unless required by applicable law or agreed to in writing, software       //
//  distributed under the License is distributed on an "AS IS" BASIS,         //
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.  //
//  See the License for the specific language governing permissions and       //
//  limitations under the License.                                            //
//                                                                            //
////////////////////////////////////////////////////////////////////////////////

#ifndef RSF_TENSOR_HPP
#define RSF_TENSOR_HPP

// Dense multilinear algebra over the discretized one-particle space
// L^2(R, C^d) ~ C^d (x) C^G. A leg of a tensor ranges over the combined
// index (node k, internal index alpha), stored as k*d + alpha (alpha fastest).
// Multi-leg tensors are row-major with the first leg slowest. All inner
// products carry the quadrature weights of the participating nodes.
//
// Legs are numbered from 0 in this API (leg 0 is the first tensor
// factor).

#include "rsf/error.hpp"
#include "rsf/types.hpp"

#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace rsf {

  //////////////////////////////////////////////////////////////////////////////
  // Internal index set {0..d-1} together with the conjugation alpha -> bar(alpha).

  class InternalIndexSpace {
  public:
    explicit InternalIndexSpace( int d = 1 );
    InternalIndexSpace( int d, std::vector<int> bar );
    int dim() const noexcept { return static_cast<int>(m_bar.size()); }
    int bar( int alpha ) const { return m_bar[static_cast<std::size_t>(alpha)]; }
    const std::vector<int>& bar_map() const noexcept { return m_bar; }
    bool operator==( const InternalIndexSpace& ) const = default;
  private:
    std::vector<int> m_bar;
  };

  //////////////////////////////////////////////////////////////////////////////
  // Quadrature nodes and weights on [-qmax, qmax].

  // n-point Gauss-Legendre rule on [-1, 1], nodes increasing.
  std::pair<std::vector<double>, std::vector<double>> gauss_legendre_rule( int n );

  class RapidityGrid {
  public:
    // Composite Gauss-Legendre rule: 8-node panels when G is a multiple of 8,
    // otherwise a single G-node panel.
    static RapidityGrid gauss_legendre( int G, double qmax = 6.0 );
    RapidityGrid( std::vector<double> nodes, std::vector<double> weights, double qmax );
    int size() const noexcept { return static_cast<int>(m_nodes.size()); }
    double node( int k ) const { return m_nodes[static_cast<std::size_t>(k)]; }
    double weight( int k ) const { return m_weights[static_cast<std::size_t>(k)]; }
    const std::vector<double>& nodes() const noexcept { return m_nodes; }
    const std::vector<double>& weights() const noexcept { return m_weights; }
    double qmax() const noexcept { return m_qmax; }
    // Grid made of the selected nodes (values and weights kept).
    RapidityGrid subgrid( const std::vector<int>& ks ) const;
    std::string describe() const;
    bool operator==( const RapidityGrid& ) const = default;
  private:
    std::vector<double> m_nodes;
    std::vector<double> m_weights;
    double m_qmax;
  };

  //////////////////////////////////////////////////////////////////////////////
  // The index space of one tensor leg. Cheap to copy (shared immutable data).

  class LegSpace {
  public:
    LegSpace( InternalIndexSpace, RapidityGrid );
    const InternalIndexSpace& index_space() const noexcept { return *m_idx; }
    const RapidityGrid& grid() const noexcept { return *m_grid; }
    int d() const noexcept { return m_idx->dim(); }
    int G() const noexcept { return m_grid->size(); }
    int dim() const noexcept { return d() * G(); }
    int index( int node, int alpha ) const noexcept { return node * d() + alpha; }
    // Quadrature weight attached to each leg index.
    std::vector<double> leg_weights() const;
    bool operator==( const LegSpace& o ) const;
    bool operator!=( const LegSpace& o ) const { return !(*this == o); }
  private:
    std::shared_ptr<const InternalIndexSpace> m_idx;
    std::shared_ptr<const RapidityGrid> m_grid;
  };

  //////////////////////////////////////////////////////////////////////////////
  // Rank-n component of the unsymmetrized Fock space.

  class LeggedTensor {
  public:
    // Largest accepted log2(number of entries); rank*log2(d*G) beyond this is
    // rejected with a capacity error.
    static constexpr double max_log2_size = 30.0;

    LeggedTensor();                                   // rank 0, value 0
    explicit LeggedTensor( std::vector<LegSpace> legs );  // zero tensor
    static LeggedTensor scalar( cplx value );
    static LeggedTensor from_values( std::vector<LegSpace> legs, std::vector<cplx> values );

    int rank() const noexcept { return static_cast<int>(m_legs.size()); }
    const std::vector<LegSpace>& legs() const noexcept { return m_legs; }
    const LegSpace& leg( int k ) const { return m_legs[static_cast<std::size_t>(k)]; }
    std::size_t size() const noexcept { return m_data.size(); }
    std::size_t stride( int k ) const { return m_strides[static_cast<std::size_t>(k)]; }
    const std::vector<cplx>& values() const noexcept { return m_data; }
    std::vector<cplx>& values() noexcept { return m_data; }
    cplx operator[]( std::size_t i ) const { return m_data[i]; }
    cplx& operator[]( std::size_t i ) { return m_data[i]; }
    std::size_t flat_index( const std::vector<int>& leg_indices ) const;
    cplx at( const std::vector<int>& leg_indices ) const { return m_data[flat_index(leg_indices)]; }
    cplx& at( const std::vector<int>& leg_indices ) { return m_data[flat_index(leg_indices)]; }

    bool same_space( const LeggedTensor& o ) const;
    bool all_finite() const;
    // Weighted L^2 norm.
    double norm() const;

    LeggedTensor& operator+=( const LeggedTensor& );
    LeggedTensor& operator-=( const LeggedTensor& );
    LeggedTensor& operator*=( cplx );
  private:
    std::vector<LegSpace> m_legs;
    std::vector<std::size_t> m_strides;
    std::vector<cplx> m_data;
  };

  LeggedTensor operator+( LeggedTensor, const LeggedTensor& );
  LeggedTensor operator-( LeggedTensor, const LeggedTensor& );
  LeggedTensor operator*( cplx, LeggedTensor );

  // Weighted inner product, conjugate-linear in the first argument.
  cplx inner_product( const LeggedTensor& s, const LeggedTensor& t );

  // Result entry at (i_0..i_{n-1}) equals the entry of T at
  // (i_{sigma(0)}..i_{sigma(n-1)}). As maps on tensors this is a
  // homomorphism: P_sigma P_tau = P_{sigma o tau}, and it is weight-unitary.
  LeggedTensor permute_legs( const LeggedTensor& T, const std::vector<int>& sigma );

  // The leg reversal sigma(p) = n-1-p, i.e. F_{1..n}.
  std::vector<int> reversal_permutation( int n );

  // Outer product a (x) b; the legs of a come first.
  LeggedTensor tensor_product( const LeggedTensor& a, const LeggedTensor& b );

  // Contracts leg k of T against conj(v) with quadrature weights; v is rank 1
  // over the same leg space. No sqrt(n) factor is applied.
  LeggedTensor contract_bra( const LeggedTensor& v, int k, const LeggedTensor& T );

  // Applies a dim x dim matrix to leg k (plain matrix action on leg indices).
  LeggedTensor apply_single_leg( const CMatrix& A, int k, const LeggedTensor& T );

  // Entrywise complex conjugate combined with alpha -> bar(alpha) on every leg
  // (the action of J_H^{(x) n}).
  LeggedTensor conjugate_bar_all_legs( const LeggedTensor& T );

  // Normally distributed entries (real and imaginary part), deterministic per engine state.
  LeggedTensor random_tensor( std::vector<LegSpace> legs, std::mt19937_64& rng );

  //////////////////////////////////////////////////////////////////////////////
  // Operators acting on two legs.
  //
  // Dense form: a (D_a D_b) x (D_a D_b) matrix, row index i_a * D_b + i_b.
  // Kernel form: node-diagonal, given by a block K(q_a, q_b) of size
  // (d_a d_b) x (d_a d_b) acting on the internal indices of the node pair,
  // optionally followed by the leg swap F (requires equal leg spaces). The
  // kernel is evaluated at the node values of the tensor it acts on, so the
  // same operator acts consistently on sub-grids.

  class TwoLegOperator {
  public:
    using Kernel = std::function<CMatrix(double qa, double qb)>;
    static TwoLegOperator dense( CMatrix M );
    static TwoLegOperator kernel( Kernel k, bool swap_after = false );
    static TwoLegOperator identity();
    static TwoLegOperator flip();
    bool is_dense() const noexcept { return m_is_dense; }
    bool swaps() const noexcept { return m_swap; }
    // Kernel form only: the block used at node values (qa, qb).
    CMatrix block( double qa, double qb, int da, int db ) const;
    // Adjoint with respect to the weighted inner product: the blockwise
    // conjugate transpose. Defined for kernel operators without swap (the
    // weights of a node pair cancel); other forms raise a structural error.
    TwoLegOperator adjoint() const;
    LeggedTensor apply( const LeggedTensor& T, int i, int j ) const;
  private:
    TwoLegOperator() = default;
    bool m_is_dense = false;
    bool m_swap = false;
    bool m_identity = false;
    CMatrix m_dense;
    Kernel m_kernel;
  };

  // M acting on legs (i, j) of rank-n tensors and as identity elsewhere.
  class EmbeddedOperator {
  public:
    EmbeddedOperator( TwoLegOperator M, int i, int j, int n );
    LeggedTensor operator()( const LeggedTensor& T ) const;
    int first() const noexcept { return m_i; }
    int second() const noexcept { return m_j; }
    int rank() const noexcept { return m_n; }
  private:
    TwoLegOperator m_op;
    int m_i, m_j, m_n;
  };

  EmbeddedOperator embed_pairwise( TwoLegOperator M, int i, int j, int n );

  //////////////////////////////////////////////////////////////////////////////
  // Exact norms of pointwise operators.
  //
  // A pointwise operator (composition of kernel-form two-leg operators and leg
  // permutations within groups of equal legs) preserves, for every group of
  // legs, the multiset of nodes. Its matrix therefore splits into blocks, one
  // per orbit of node tuples, and each block can be obtained by applying the
  // operator to unit tensors over the sub-grid of the orbit's nodes. The
  // quadrature weight product is constant on an orbit, so the weighted norm
  // of the operator is the maximum plain spectral norm over the blocks.

  struct LegGroup {
    LegSpace space;
    int count;
  };

  using TensorMap = std::function<LeggedTensor(const LeggedTensor&)>;

  // Calls visit(block) for every orbit block of op. Returns the number of blocks.
  std::size_t for_each_orbit_block( const std::vector<LegGroup>& groups,
                                    const TensorMap& op,
                                    const std::function<void(const CMatrix&)>& visit );

  // max over orbits of ||block||.
  double orbit_operator_norm( const std::vector<LegGroup>& groups, const TensorMap& op );

  // Legs described by groups, in order.
  std::vector<LegSpace> expand_groups( const std::vector<LegGroup>& groups );

  //////////////////////////////////////////////////////////////////////////////
  // Norm estimate for general operators on a tensor space by seeded power
  // iteration on B*B, where apply_adj is the weighted adjoint of apply.
  // Returns a lower bound of ||B|| that converges to it.

  double power_norm_estimate( const std::vector<LegSpace>& legs, const TensorMap& apply,
                              const TensorMap& apply_adj, std::uint64_t seed, int iterations = 60 );

}

#endif
