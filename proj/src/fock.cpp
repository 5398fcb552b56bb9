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

#include "rsf/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rsf {

  namespace {

    constexpr std::uint64_t norm_seed = 0x5eed5eedULL;

    LeggedTensor conj_tensor( LeggedTensor T )
    {
      for ( auto& v : T.values() )
        v = std::conj(v);
      return T;
    }

    std::vector<LegGroup> rank_groups( const LegSpace& leg, int n )
    {
      return {LegGroup{leg, n}};
    }

    // Braiding kernels are evaluated at the node values of the tensor they
    // act on, so any grid (in particular orbit sub-grids) is accepted as long
    // as all legs agree and carry the braiding's internal index space.
    void require_rank_n( const BraidingData& B, const LeggedTensor& T, const char* where )
    {
      for ( const auto& l : T.legs() )
        if ( l != T.leg(0) || l.index_space() != B.leg().index_space() )
          RSF_THROW(Structural, where << ": tensor legs differ from the braiding's leg space");
    }

    void require_one_particle( const BraidingData& B, const LeggedTensor& f, const char* where )
    {
      if ( f.rank() != 1 || f.leg(0) != B.leg() )
        RSF_THROW(Structural, where << ": one-particle argument must be rank 1 over the braiding's leg space");
    }

    // Unique sorted rapidity differences q_i - q_j of a grid.
    RapidityGrid difference_grid( const RapidityGrid& grid )
    {
      std::vector<double> diffs;
      diffs.reserve(static_cast<std::size_t>(grid.size() * grid.size()));
      for ( double a : grid.nodes() )
        for ( double b : grid.nodes() )
          diffs.push_back(a - b);
      std::sort(diffs.begin(), diffs.end());
      diffs.erase(std::unique(diffs.begin(), diffs.end()), diffs.end());
      std::vector<double> w(diffs.size(), 1.0);
      const double qmax = std::max(std::abs(diffs.front()), std::abs(diffs.back()));
      return RapidityGrid(std::move(diffs), std::move(w), qmax);
    }

    double log2_factorial( int n )
    {
      return std::lgamma(static_cast<double>(n) + 1.0) / std::log(2.0);
    }

    // Norm of a linear map on a tensor space: exact over orbits for
    // pointwise maps, power iteration otherwise.
    double map_norm( const LegSpace& leg, int n, bool pointwise, const TensorMap& op, const TensorMap& adj )
    {
      if ( pointwise )
        return orbit_operator_norm(rank_groups(leg, n), op);
      return power_norm_estimate(std::vector<LegSpace>(static_cast<std::size_t>(n), leg), op, adj, norm_seed);
    }

  }

  //////////////////////////////////////////////////////////////////////////////

  BraidingData::BraidingData( MatrixScatteringFunction R, LegSpace leg )
    : m_R(std::move(R)), m_leg(std::move(leg)),
      m_Rop(TwoLegOperator::identity()), m_Phi(TwoLegOperator::identity()),
      m_Radj(TwoLegOperator::identity())
  {
    const MatrixScatteringFunction& r = m_R;
    TwoLegOperator::Kernel k = [r]( double qa, double qb ) { return r.eval_r(cplx(qa - qb, 0.0)); };
    m_Rop = TwoLegOperator::kernel(k, false);
    m_Phi = TwoLegOperator::kernel(k, true);
    m_Radj = m_Rop.adjoint();
  }

  LeggedTensor BraidingData::apply_phi_adjoint( const LeggedTensor& T, int i, int j ) const
  {
    return m_Radj.apply(TwoLegOperator::flip().apply(T, i, j), i, j);
  }

  BraidingData braiding( const MatrixScatteringFunction& R, const RapidityGrid& grid, const Tolerances& tol )
  {
    if ( R.kind() == DeclaredKind::LR )
      RSF_THROW(Structural, "braiding: '" << R.label() << "' is a left-right function");
    const RapidityGrid diffs = difference_grid(grid);
    for ( const ReportEntry& e : {check_unitarity(R, diffs, tol.algebraic),
                                  check_hermitian_analyticity(R, diffs, tol.algebraic)} )
      if ( !e.pass )
        RSF_THROW_RESIDUAL(Precondition, e.residual,
                           "braiding: '" << R.label() << "' fails " << e.axiom << " (residual "
                           << e.residual << " > " << e.tolerance << ")");
    BraidingData B(R, LegSpace(R.index_space(), grid));
    const auto groups = rank_groups(B.leg(), 2);
    const double sa = orbit_operator_norm(groups, [&B]( const LeggedTensor& T ) {
      return B.apply_phi_adjoint(T, 0, 1) - B.Phi().apply(T, 0, 1);
    });
    const double inv = orbit_operator_norm(groups, [&B]( const LeggedTensor& T ) {
      return B.Phi().apply(B.Phi().apply(T, 0, 1), 0, 1) - T;
    });
    B.m_involution = std::max(sa, inv);
    return B;
  }

  //////////////////////////////////////////////////////////////////////////////

  Word word_for( const Permutation& sigma )
  {
    const int n = static_cast<int>(sigma.size());
    std::vector<bool> seen(sigma.size(), false);
    for ( int v : sigma ) {
      if ( v < 0 || v >= n || seen[static_cast<std::size_t>(v)] )
        RSF_THROW(Structural, "word_for: not a permutation");
      seen[static_cast<std::size_t>(v)] = true;
    }
    // sigma = sigma' tau_p with one inversion fewer in sigma'; the letters
    // found this way, reversed, multiply to sigma.
    Permutation s = sigma;
    Word found;
    bool changed = true;
    while ( changed ) {
      changed = false;
      for ( int p = 0; p + 1 < n; ++p )
        if ( s[static_cast<std::size_t>(p)] > s[static_cast<std::size_t>(p + 1)] ) {
          std::swap(s[static_cast<std::size_t>(p)], s[static_cast<std::size_t>(p + 1)]);
          found.push_back(p);
          changed = true;
        }
    }
    std::reverse(found.begin(), found.end());
    return found;
  }

  Permutation permutation_of( const Word& w, int n )
  {
    Permutation s(static_cast<std::size_t>(n));
    std::iota(s.begin(), s.end(), 0);
    // s = tau_{j1} ... tau_{jk}: right-multiply letter by letter.
    for ( int j : w ) {
      if ( j < 0 || j + 1 >= n )
        RSF_THROW(Structural, "permutation_of: letter " << j << " invalid for n = " << n);
      std::swap(s[static_cast<std::size_t>(j)], s[static_cast<std::size_t>(j + 1)]);
    }
    return s;
  }

  std::vector<Permutation> all_permutations( int n )
  {
    if ( n < 0 )
      RSF_THROW(Structural, "all_permutations: negative n");
    std::vector<Permutation> out;
    Permutation s(static_cast<std::size_t>(n));
    std::iota(s.begin(), s.end(), 0);
    do {
      out.push_back(s);
    } while ( std::next_permutation(s.begin(), s.end()) );
    return out;
  }

  namespace {
    void check_word( const Word& w, int n )
    {
      for ( int j : w )
        if ( j < 0 || j + 1 >= n )
          RSF_THROW(Structural, "perm_rep: letter " << j << " is not an adjacent transposition of "
                    << n << " legs");
    }
  }

  LeggedTensor perm_rep( const BraidingData& B, const Word& w, const LeggedTensor& T )
  {
    require_rank_n(B, T, "perm_rep");
    check_word(w, T.rank());
    LeggedTensor Y = T;
    for ( auto it = w.rbegin(); it != w.rend(); ++it )
      Y = B.Phi().apply(Y, *it, *it + 1);
    return Y;
  }

  LeggedTensor perm_rep_adjoint( const BraidingData& B, const Word& w, const LeggedTensor& T )
  {
    require_rank_n(B, T, "perm_rep_adjoint");
    check_word(w, T.rank());
    LeggedTensor Y = T;
    for ( int j : w )
      Y = B.apply_phi_adjoint(Y, j, j + 1);
    return Y;
  }

  TensorMap perm_rep( const BraidingData& B, int n, const Word& w )
  {
    check_word(w, n);
    return [B, n, w]( const LeggedTensor& T ) {
      if ( T.rank() != n )
        RSF_THROW(Structural, "perm_rep: operator of rank " << n << " applied to rank " << T.rank());
      return perm_rep(B, w, T);
    };
  }

  namespace {
    void check_projector_capacity( const BraidingData& B, int n )
    {
      const double work = log2_factorial(n) + n * std::log2(static_cast<double>(B.leg().dim()));
      if ( work > max_log2_projector_work )
        RSF_THROW(Capacity, "projector: n! (dG)^n = 2^" << work << " exceeds the limit 2^"
                  << max_log2_projector_work << " (n = " << n << ", dG = " << B.leg().dim() << ")");
    }

  }

  LeggedTensor projector_sum( const BraidingData& B, const LeggedTensor& T )
  {
    require_rank_n(B, T, "projector_sum");
    const int n = T.rank();
    check_projector_capacity(B, n);
    LeggedTensor acc(T.legs());
    const auto perms = all_permutations(n);
    for ( const auto& s : perms )
      acc += perm_rep(B, word_for(s), T);
    acc *= cplx(1.0 / static_cast<double>(perms.size()));
    return acc;
  }

  LeggedTensor projector( const BraidingData& B, const LeggedTensor& T )
  {
    require_rank_n(B, T, "projector");
    return block_projector(B, T, 0, T.rank());
  }

  LeggedTensor projector_adjoint( const BraidingData& B, const LeggedTensor& T )
  {
    require_rank_n(B, T, "projector_adjoint");
    const int n = T.rank();
    check_projector_capacity(B, n);
    LeggedTensor acc(T.legs());
    const auto perms = all_permutations(n);
    for ( const auto& s : perms )
      acc += perm_rep_adjoint(B, word_for(s), T);
    acc *= cplx(1.0 / static_cast<double>(perms.size()));
    return acc;
  }

  TensorMap projector( const BraidingData& B, int n )
  {
    return [B, n]( const LeggedTensor& T ) {
      if ( T.rank() != n )
        RSF_THROW(Structural, "projector: operator of rank " << n << " applied to rank " << T.rank());
      return projector(B, T);
    };
  }

  double projector_idempotency_residual( const BraidingData& B, int n )
  {
    return orbit_operator_norm(rank_groups(B.leg(), n), [&B]( const LeggedTensor& T ) {
      const LeggedTensor P = projector_sum(B, T);
      return projector_sum(B, P) - P;
    });
  }

  double projector_selfadjoint_residual( const BraidingData& B, int n )
  {
    return orbit_operator_norm(rank_groups(B.leg(), n), [&B]( const LeggedTensor& T ) {
      return projector_sum(B, T) - projector_adjoint(B, T);
    });
  }

  double projector_invariance_residual( const BraidingData& B, int n )
  {
    double r = 0.0;
    for ( const auto& s : all_permutations(n) ) {
      const Word w = word_for(s);
      r = std::max(r, orbit_operator_norm(rank_groups(B.leg(), n), [&B, &w]( const LeggedTensor& T ) {
        const LeggedTensor P = projector_sum(B, T);
        return perm_rep(B, w, P) - P;
      }));
    }
    return r;
  }

  double projector_route_residual( const BraidingData& B, int n )
  {
    return orbit_operator_norm(rank_groups(B.leg(), n), [&B]( const LeggedTensor& T ) {
      return projector_sum(B, T) - projector(B, T);
    });
  }

  double flip_product_identity_check( const BraidingData& B, int n )
  {
    if ( n < 1 )
      RSF_THROW(Structural, "flip_product_identity_check: n must be positive");
    std::vector<std::pair<int,int>> pairs;
    for ( int i = 0; i < n; ++i )
      for ( int j = i + 1; j < n; ++j )
        pairs.emplace_back(i, j);
    const auto rev = reversal_permutation(n);
    return orbit_operator_norm(rank_groups(B.leg(), n), [&]( const LeggedTensor& T ) {
      const LeggedTensor P = projector_sum(B, T);
      LeggedTensor rhs = P;
      // prod R_12 R_13 ... R_{n-1,n}: the rightmost factor acts first.
      for ( auto it = pairs.rbegin(); it != pairs.rend(); ++it )
        rhs = B.R().apply(rhs, it->first, it->second);
      return permute_legs(P, rev) - rhs;
    });
  }

  double braid_relation_residual( const BraidingData& B )
  {
    return orbit_operator_norm(rank_groups(B.leg(), 3), [&B]( const LeggedTensor& T ) {
      return perm_rep(B, Word{0, 1, 0}, T) - perm_rep(B, Word{1, 0, 1}, T);
    });
  }

  //////////////////////////////////////////////////////////////////////////////

  OneParticleOperator::OneParticleOperator( LegSpace leg, CMatrix M, Multiplier m )
    : m_leg(std::move(leg)), m_M(std::move(M)), m_mult(std::move(m))
  {
    if ( !m_mult && (m_M.rows() != m_leg.dim() || m_M.cols() != m_leg.dim()) )
      RSF_THROW(Structural, "OneParticleOperator: matrix is " << m_M.rows() << "x" << m_M.cols()
                << ", leg dimension is " << m_leg.dim());
  }

  OneParticleOperator OneParticleOperator::multiplier( const LegSpace& leg, Multiplier m )
  {
    const int d = leg.d();
    for ( int k = 0; k < leg.G(); ++k ) {
      const CMatrix b = m(leg.grid().node(k));
      if ( b.rows() != d || b.cols() != d )
        RSF_THROW(Structural, "OneParticleOperator::multiplier: block is " << b.rows() << "x" << b.cols()
                  << ", expected " << d << "x" << d);
    }
    return OneParticleOperator(leg, CMatrix(), std::move(m));
  }

  OneParticleOperator OneParticleOperator::dense( const LegSpace& leg, CMatrix M )
  {
    return OneParticleOperator(leg, std::move(M), nullptr);
  }

  OneParticleOperator OneParticleOperator::identity( const LegSpace& leg )
  {
    const int d = leg.d();
    return multiplier(leg, [d]( double ) { return CMatrix(CMatrix::Identity(d, d)); });
  }

  CMatrix OneParticleOperator::matrix_on( const LegSpace& leg ) const
  {
    if ( !m_mult ) {
      if ( leg != m_leg )
        RSF_THROW(Structural, "OneParticleOperator: dense operator applied on a different leg space");
      return m_M;
    }
    if ( leg.index_space() != m_leg.index_space() )
      RSF_THROW(Structural, "OneParticleOperator: multiplier applied on a different index space");
    const int d = leg.d();
    CMatrix M = CMatrix::Zero(leg.dim(), leg.dim());
    for ( int k = 0; k < leg.G(); ++k )
      M.block(k * d, k * d, d, d) = m_mult(leg.grid().node(k));
    return M;
  }

  OneParticleOperator OneParticleOperator::adjoint() const
  {
    if ( m_mult ) {
      // The weight of a node cancels in a node-local operator.
      Multiplier m = m_mult;
      return OneParticleOperator(m_leg, CMatrix(), [m]( double q ) { return CMatrix(m(q).adjoint()); });
    }
    const auto w = m_leg.leg_weights();
    CMatrix A = m_M.adjoint();
    for ( Eigen::Index r = 0; r < A.rows(); ++r )
      for ( Eigen::Index c = 0; c < A.cols(); ++c )
        A(r, c) *= w[static_cast<std::size_t>(c)] / w[static_cast<std::size_t>(r)];
    return OneParticleOperator(m_leg, std::move(A), nullptr);
  }

  OneParticleOperator OneParticleOperator::operator*( const OneParticleOperator& o ) const
  {
    if ( m_leg != o.m_leg )
      RSF_THROW(Structural, "OneParticleOperator: product of operators on different leg spaces");
    if ( m_mult && o.m_mult ) {
      Multiplier a = m_mult, b = o.m_mult;
      return OneParticleOperator(m_leg, CMatrix(), [a, b]( double q ) { return CMatrix(a(q) * b(q)); });
    }
    return OneParticleOperator(m_leg, matrix() * o.matrix(), nullptr);
  }

  LeggedTensor OneParticleOperator::apply( const LeggedTensor& T, int k ) const
  {
    return apply_single_leg(matrix_on(T.leg(k)), k, T);
  }

  LeggedTensor OneParticleOperator::apply_all( const LeggedTensor& T ) const
  {
    LeggedTensor Y = T;
    for ( int k = 0; k < T.rank(); ++k )
      Y = apply(Y, k);
    return Y;
  }

  OneParticleOperator translation_operator( const LegSpace& leg, double t )
  {
    const int d = leg.d();
    return OneParticleOperator::multiplier(leg, [t, d]( double q ) {
      return CMatrix(std::exp(I_unit * t * std::exp(q)) * CMatrix::Identity(d, d));
    });
  }

  OneParticleOperator internal_operator( const LegSpace& leg, const CMatrix& V )
  {
    return OneParticleOperator::multiplier(leg, [V]( double ) { return V; });
  }

  AntilinearOperator AntilinearOperator::modular_conjugation( const LegSpace& leg )
  {
    const InternalIndexSpace& idx = leg.index_space();
    CMatrix P = CMatrix::Zero(idx.dim(), idx.dim());
    for ( int a = 0; a < idx.dim(); ++a )
      P(a, idx.bar(a)) = 1.0;
    return AntilinearOperator(internal_operator(leg, P));
  }

  LeggedTensor AntilinearOperator::apply_all( const LeggedTensor& T ) const
  {
    return m_M.apply_all(conj_tensor(T));
  }

  //////////////////////////////////////////////////////////////////////////////

  FockVector::FockVector( LegSpace leg, int nmax )
    : m_leg(std::move(leg)), m_nmax(nmax)
  {
    if ( nmax < 0 )
      RSF_THROW(Structural, "FockVector: negative truncation " << nmax);
    m_levels.reserve(static_cast<std::size_t>(nmax + 1));
    for ( int n = 0; n <= nmax; ++n )
      m_levels.emplace_back(std::vector<LegSpace>(static_cast<std::size_t>(n), m_leg));
  }

  FockVector FockVector::vacuum( LegSpace leg, int nmax )
  {
    FockVector v(std::move(leg), nmax);
    v.m_levels[0][0] = 1.0;
    return v;
  }

  const LeggedTensor& FockVector::level( int n ) const
  {
    if ( n < 0 || n > m_nmax )
      RSF_THROW(Domain, "FockVector: level " << n << " outside 0.." << m_nmax);
    return m_levels[static_cast<std::size_t>(n)];
  }

  LeggedTensor& FockVector::level( int n )
  {
    if ( n < 0 || n > m_nmax )
      RSF_THROW(Domain, "FockVector: level " << n << " outside 0.." << m_nmax);
    return m_levels[static_cast<std::size_t>(n)];
  }

  void FockVector::set_level( int n, LeggedTensor T )
  {
    LeggedTensor& slot = level(n);
    if ( !T.same_space(slot) )
      RSF_THROW(Structural, "FockVector: level " << n << " tensor has the wrong space");
    slot = std::move(T);
  }

  void FockVector::add_leakage( double dropped_norm )
  {
    m_leakage = std::hypot(m_leakage, dropped_norm);
  }

  double FockVector::norm() const
  {
    double s = 0.0;
    for ( const auto& L : m_levels ) {
      const double v = L.norm();
      s += v * v;
    }
    return std::sqrt(s);
  }

  double FockVector::number_weighted_norm( double c ) const
  {
    double s = 0.0;
    for ( int n = 0; n <= m_nmax; ++n ) {
      const double v = m_levels[static_cast<std::size_t>(n)].norm();
      s += (n + c) * v * v;
    }
    return std::sqrt(s);
  }

  bool FockVector::all_finite() const
  {
    return std::all_of(m_levels.begin(), m_levels.end(), []( const LeggedTensor& L ) { return L.all_finite(); });
  }

  void FockVector::require_compatible( const FockVector& o ) const
  {
    if ( m_leg != o.m_leg || m_nmax != o.m_nmax )
      RSF_THROW(Structural, "FockVector: incompatible leg spaces or truncations");
  }

  FockVector& FockVector::operator+=( const FockVector& o )
  {
    require_compatible(o);
    for ( std::size_t n = 0; n < m_levels.size(); ++n )
      m_levels[n] += o.m_levels[n];
    add_leakage(o.m_leakage);
    return *this;
  }

  FockVector& FockVector::operator-=( const FockVector& o )
  {
    require_compatible(o);
    for ( std::size_t n = 0; n < m_levels.size(); ++n )
      m_levels[n] -= o.m_levels[n];
    add_leakage(o.m_leakage);
    return *this;
  }

  FockVector& FockVector::operator*=( cplx c )
  {
    for ( auto& L : m_levels )
      L *= c;
    m_leakage *= std::abs(c);
    return *this;
  }

  FockVector operator+( FockVector a, const FockVector& b ) { return a += b; }
  FockVector operator-( FockVector a, const FockVector& b ) { return a -= b; }
  FockVector operator*( cplx c, FockVector a ) { return a *= c; }

  cplx inner_product( const FockVector& a, const FockVector& b )
  {
    if ( a.leg() != b.leg() || a.nmax() != b.nmax() )
      RSF_THROW(Structural, "inner_product: incompatible Fock vectors");
    cplx s = 0.0;
    for ( int n = 0; n <= a.nmax(); ++n )
      s += inner_product(a.level(n), b.level(n));
    return s;
  }

  double symmetry_residual( const BraidingData& B, const FockVector& psi )
  {
    double r = 0.0;
    for ( int n = 2; n <= psi.nmax(); ++n )
      r += (projector(B, psi.level(n)) - psi.level(n)).norm();
    return r;
  }

  FockVector random_symmetric( const BraidingData& B, int nmax, std::mt19937_64& rng, int top_level )
  {
    if ( top_level < 0 )
      top_level = nmax;
    FockVector v(B.leg(), nmax);
    std::normal_distribution<double> nd;
    v.level(0)[0] = cplx(nd(rng), nd(rng));
    for ( int n = 1; n <= std::min(top_level, nmax); ++n ) {
      LeggedTensor T = random_tensor(std::vector<LegSpace>(static_cast<std::size_t>(n), B.leg()), rng);
      v.set_level(n, projector(B, T));
    }
    const double nv = v.norm();
    if ( nv > 0.0 )
      v *= cplx(1.0 / nv);
    return v;
  }

  FockVector one_particle_state( const LegSpace& leg, int nmax, const LeggedTensor& f )
  {
    FockVector v(leg, nmax);
    if ( nmax < 1 ) {
      v.add_leakage(f.norm());
      return v;
    }
    v.set_level(1, f);
    return v;
  }

  //////////////////////////////////////////////////////////////////////////////

  double morphism_residual( const BraidingData& B, const OneParticleOperator& A )
  {
    if ( A.leg().index_space() != B.leg().index_space() )
      RSF_THROW(Structural, "morphism_residual: operator and braiding live on different leg spaces");
    const OneParticleOperator Aa = A.adjoint();
    TensorMap op = [&]( const LeggedTensor& T ) {
      return A.apply_all(B.R().apply(T, 0, 1)) - B.R().apply(A.apply_all(T), 0, 1);
    };
    TensorMap adj = [&]( const LeggedTensor& T ) {
      return B.R_adjoint().apply(Aa.apply_all(T), 0, 1) - Aa.apply_all(B.R_adjoint().apply(T, 0, 1));
    };
    return map_norm(B.leg(), 2, A.local(), op, adj);
  }

  double antilinear_morphism_residual( const BraidingData& B, const AntilinearOperator& A )
  {
    const OneParticleOperator& M = A.linear_part();
    if ( M.leg().index_space() != B.leg().index_space() )
      RSF_THROW(Structural, "antilinear_morphism_residual: operator and braiding live on different leg spaces");
    const OneParticleOperator Ma = M.adjoint();
    // L(eta) = X(conj eta) with X = (A (x) A) R - R* (A (x) A); L is linear.
    TensorMap op = [&]( const LeggedTensor& T ) {
      return M.apply_all(conj_tensor(B.R().apply(conj_tensor(T), 0, 1)))
           - B.R_adjoint().apply(M.apply_all(T), 0, 1);
    };
    TensorMap adj = [&]( const LeggedTensor& T ) {
      return conj_tensor(B.R_adjoint().apply(conj_tensor(Ma.apply_all(T)), 0, 1))
           - Ma.apply_all(B.R().apply(T, 0, 1));
    };
    return map_norm(B.leg(), 2, M.local(), op, adj);
  }

  LeggedTensor second_quantize_level( const OneParticleOperator& A, const LeggedTensor& T )
  {
    return A.apply_all(T);
  }

  LeggedTensor hat_second_quantize_level( const AntilinearOperator& A, const LeggedTensor& T )
  {
    return permute_legs(A.apply_all(T), reversal_permutation(T.rank()));
  }

  FockMap second_quantize( const BraidingData& B, const OneParticleOperator& A, double tol )
  {
    const double r = morphism_residual(B, A);
    if ( !(r <= tol) )
      RSF_THROW_RESIDUAL(Precondition, r, "second_quantize: (A x A) R != R (A x A), residual " << r
                         << " > " << tol);
    return [A]( const FockVector& psi ) {
      if ( psi.leg() != A.leg() )
        RSF_THROW(Structural, "second_quantize: Fock vector over a different leg space");
      FockVector out(psi.leg(), psi.nmax());
      for ( int n = 0; n <= psi.nmax(); ++n )
        out.set_level(n, second_quantize_level(A, psi.level(n)));
      out.add_leakage(psi.leakage());
      return out;
    };
  }

  FockMap hat_second_quantize( const BraidingData& B, const AntilinearOperator& A, double tol )
  {
    const double r = antilinear_morphism_residual(B, A);
    if ( !(r <= tol) )
      RSF_THROW_RESIDUAL(Precondition, r, "hat_second_quantize: (A x A) R != R* (A x A), residual " << r
                         << " > " << tol);
    return [A]( const FockVector& psi ) {
      if ( psi.leg() != A.linear_part().leg() )
        RSF_THROW(Structural, "hat_second_quantize: Fock vector over a different leg space");
      FockVector out(psi.leg(), psi.nmax());
      for ( int n = 0; n <= psi.nmax(); ++n )
        out.set_level(n, hat_second_quantize_level(A, psi.level(n)));
      out.add_leakage(psi.leakage());
      return out;
    };
  }

  //////////////////////////////////////////////////////////////////////////////

  LeggedTensor insert_leg( const LeggedTensor& T, const LeggedTensor& f, int pos )
  {
    if ( f.rank() != 1 )
      RSF_THROW(Structural, "insert_leg: inserted tensor must have rank 1");
    const int r = T.rank();
    if ( pos < 0 || pos > r )
      RSF_THROW(Structural, "insert_leg: position " << pos << " invalid for rank " << r);
    const LeggedTensor X = tensor_product(f, T);
    if ( pos == 0 )
      return X;
    // Input leg k of f (x) T lands at position sigma(k).
    std::vector<int> sigma{pos};
    for ( int k = 1; k <= r; ++k )
      sigma.push_back(k <= pos ? k - 1 : k);
    return permute_legs(X, sigma);
  }

  namespace {

    void require_block( const LeggedTensor& T, int off, int len, const char* where )
    {
      if ( off < 0 || len < 0 || off + len > T.rank() )
        RSF_THROW(Structural, where << ": block [" << off << ", " << off + len << ") invalid for rank "
                  << T.rank());
    }

    LeggedTensor block_projector_impl( const BraidingData& B, const LeggedTensor& T, int off, int len )
    {
      if ( len <= 1 )
        return T;
      LeggedTensor Y = block_projector_impl(B, T, off, len - 1);
      LeggedTensor acc = Y;
      for ( int i = len - 2; i >= 0; --i ) {
        Y = B.Phi().apply(Y, off + i, off + i + 1);
        acc += Y;
      }
      acc *= cplx(1.0 / len);
      return acc;
    }

    LeggedTensor jh( const LeggedTensor& g )
    {
      return conjugate_bar_all_legs(g);
    }

  }

  LeggedTensor block_projector( const BraidingData& B, const LeggedTensor& T, int off, int len )
  {
    require_block(T, off, len, "block_projector");
    return block_projector_impl(B, T, off, len);
  }

  LeggedTensor block_create( const BraidingData& B, const LeggedTensor& f, const LeggedTensor& T, int off, int len,
                             Symmetry sym )
  {
    require_block(T, off, len, "block_create");
    const double scale = std::sqrt(static_cast<double>(len + 1));
    if ( sym == Symmetry::Enforced ) {
      LeggedTensor P = block_projector_impl(B, insert_leg(block_projector_impl(B, T, off, len), f, off), off, len + 1);
      P *= cplx(scale);
      return P;
    }
    // (1/(len+1)) sum_i X_{1i}, X_{1i} = Phi_{i-1,i} ... Phi_{12}.
    LeggedTensor Y = insert_leg(T, f, off);
    LeggedTensor acc = Y;
    for ( int i = 1; i <= len; ++i ) {
      Y = B.Phi().apply(Y, off + i - 1, off + i);
      acc += Y;
    }
    acc *= cplx(1.0 / scale);
    return acc;
  }

  LeggedTensor block_annihilate( const LeggedTensor& f, const LeggedTensor& T, int off, int len )
  {
    require_block(T, off, len, "block_annihilate");
    if ( len == 0 )
      RSF_THROW(Domain, "block_annihilate: empty block");
    LeggedTensor L = contract_bra(f, off, T);
    L *= cplx(std::sqrt(static_cast<double>(len)));
    return L;
  }

  LeggedTensor block_reflected_create( const BraidingData& B, const LeggedTensor& g, const LeggedTensor& T,
                                       int off, int len, Symmetry sym )
  {
    require_block(T, off, len, "block_reflected_create");
    const double scale = std::sqrt(static_cast<double>(len + 1));
    const LeggedTensor h = jh(g);
    if ( sym == Symmetry::Enforced ) {
      LeggedTensor P = block_projector_impl(B, insert_leg(block_projector_impl(B, T, off, len), h, off + len),
                                            off, len + 1);
      P *= cplx(scale);
      return P;
    }
    // (1/(len+1)) sum_i Phi_{i,i+1} ... Phi_{len,len+1}.
    LeggedTensor Y = insert_leg(T, h, off + len);
    LeggedTensor acc = Y;
    for ( int i = len - 1; i >= 0; --i ) {
      Y = B.Phi().apply(Y, off + i, off + i + 1);
      acc += Y;
    }
    acc *= cplx(1.0 / scale);
    return acc;
  }

  LeggedTensor block_reflected_annihilate( const LeggedTensor& g, const LeggedTensor& T, int off, int len )
  {
    require_block(T, off, len, "block_reflected_annihilate");
    if ( len == 0 )
      RSF_THROW(Domain, "block_reflected_annihilate: empty block");
    LeggedTensor L = contract_bra(jh(g), off + len - 1, T);
    L *= cplx(std::sqrt(static_cast<double>(len)));
    return L;
  }

  namespace {

    LeggedTensor create_level( const BraidingData& B, const LeggedTensor& f, const LeggedTensor& psi_n,
                               CreationPath path )
    {
      const int n = psi_n.rank();
      if ( path == CreationPath::Projector ) {
        LeggedTensor P = projector_sum(B, tensor_product(f, psi_n));
        P *= cplx(std::sqrt(static_cast<double>(n + 1)));
        return P;
      }
      return block_create(B, f, psi_n, 0, n);
    }

  }

  FockVector create( const BraidingData& B, const LeggedTensor& f, const FockVector& psi, CreationPath path )
  {
    require_one_particle(B, f, "create");
    if ( psi.leg() != B.leg() )
      RSF_THROW(Structural, "create: Fock vector over a different leg space");
    FockVector out(psi.leg(), psi.nmax());
    out.add_leakage(psi.leakage());
    for ( int n = 0; n <= psi.nmax(); ++n ) {
      if ( n == psi.nmax() ) {
        // Dropped level: record its norm (zero input levels drop nothing).
        if ( psi.level(n).norm() > 0.0 )
          out.add_leakage(create_level(B, f, psi.level(n), CreationPath::XFormula).norm());
        break;
      }
      out.set_level(n + 1, create_level(B, f, psi.level(n), path));
    }
    return out;
  }

  FockVector create( const BraidingData& B, const OneParticleVector& f, const FockVector& psi, CreationPath path )
  {
    return create(B, f.sample(B.leg()), psi, path);
  }

  FockVector annihilate( const BraidingData& B, const LeggedTensor& f, const FockVector& psi )
  {
    require_one_particle(B, f, "annihilate");
    if ( psi.leg() != B.leg() )
      RSF_THROW(Structural, "annihilate: Fock vector over a different leg space");
    FockVector out(psi.leg(), psi.nmax());
    out.add_leakage(psi.leakage());
    for ( int n = 1; n <= psi.nmax(); ++n )
      out.set_level(n - 1, block_annihilate(f, psi.level(n), 0, n));
    return out;
  }

  FockVector annihilate( const BraidingData& B, const OneParticleVector& f, const FockVector& psi )
  {
    return annihilate(B, f.sample(B.leg()), psi);
  }

  FockVector segal_field( const BraidingData& B, const LeggedTensor& f, const FockVector& psi )
  {
    return create(B, f, psi) + annihilate(B, f, psi);
  }

  FockVector segal_field( const BraidingData& B, const OneParticleVector& f, const FockVector& psi )
  {
    return segal_field(B, f.sample(B.leg()), psi);
  }

  FockVector fock_conjugation( const FockVector& psi )
  {
    FockVector out(psi.leg(), psi.nmax());
    for ( int n = 0; n <= psi.nmax(); ++n )
      out.set_level(n, permute_legs(conjugate_bar_all_legs(psi.level(n)), reversal_permutation(n)));
    out.add_leakage(psi.leakage());
    return out;
  }

  FockVector reflected_creation( const BraidingData& B, const LeggedTensor& g, const FockVector& psi )
  {
    require_one_particle(B, g, "reflected_creation");
    FockVector out(psi.leg(), psi.nmax());
    out.add_leakage(psi.leakage());
    for ( int n = 0; n <= psi.nmax(); ++n ) {
      if ( n == psi.nmax() ) {
        if ( psi.level(n).norm() > 0.0 )
          out.add_leakage(block_reflected_create(B, g, psi.level(n), 0, n).norm());
        break;
      }
      out.set_level(n + 1, block_reflected_create(B, g, psi.level(n), 0, n));
    }
    return out;
  }

  FockVector reflected_annihilation( const BraidingData& B, const LeggedTensor& g, const FockVector& psi )
  {
    require_one_particle(B, g, "reflected_annihilation");
    FockVector out(psi.leg(), psi.nmax());
    out.add_leakage(psi.leakage());
    for ( int n = 1; n <= psi.nmax(); ++n )
      out.set_level(n - 1, block_reflected_annihilate(g, psi.level(n), 0, n));
    return out;
  }

  FockVector reflected_field( const BraidingData& B, const LeggedTensor& g, const FockVector& psi,
                              ReflectedRoute route )
  {
    if ( route == ReflectedRoute::Conjugation )
      return fock_conjugation(segal_field(B, g, fock_conjugation(psi)));
    return reflected_creation(B, g, psi) + reflected_annihilation(B, g, psi);
  }

  FockVector reflected_field( const BraidingData& B, const OneParticleVector& g, const FockVector& psi,
                              ReflectedRoute route )
  {
    return reflected_field(B, g.sample(B.leg()), psi, route);
  }

  //////////////////////////////////////////////////////////////////////////////

  ReportEntry check_particle_bounds( const BraidingData& B, const LeggedTensor& f, int trials, int nmax,
                                     std::uint64_t seed, double slack )
  {
    require_one_particle(B, f, "check_particle_bounds");
    if ( trials < 1 || nmax < 1 )
      RSF_THROW(Parameter, "check_particle_bounds: need trials >= 1 and nmax >= 1");
    std::mt19937_64 rng(seed);
    const double nf = f.norm();
    double worst = 0.0;
    auto violation = []( double lhs, double rhs ) {
      if ( rhs == 0.0 )
        return lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      return std::max(0.0, lhs / rhs - 1.0);
    };
    for ( int t = 0; t < trials; ++t ) {
      const FockVector psi = random_symmetric(B, nmax, rng);
      FockVector low = psi;
      low.set_level(nmax, LeggedTensor(std::vector<LegSpace>(static_cast<std::size_t>(nmax), B.leg())));
      const FockVector a = create(B, f, low);
      const FockVector as = annihilate(B, f, psi);
      worst = std::max(worst, violation(a.norm(), nf * low.number_weighted_norm(1.0)));
      worst = std::max(worst, violation(as.norm(), nf * psi.number_weighted_norm(0.0)));
    }
    return make_entry("particle_bounds", worst, static_cast<std::size_t>(trials), slack,
                      "random symmetric vectors, N_max = " + std::to_string(nmax));
  }

}
