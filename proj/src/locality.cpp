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

#include "rsf/locality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rsf {

  namespace {

    constexpr double symmetry_slack = 1e-9;

    void require_certified( const LocalizedVector& v, const char* name, bool allow_control, const char* where )
    {
      if ( v.certified() || allow_control )
        return;
      std::string failing;
      for ( const auto& e : v.certificate() )
        if ( !e.pass )
          failing += (failing.empty() ? "" : ", ") + e.axiom;
      RSF_THROW(Precondition, where << ": " << name << " is not certified local (support ["
                << v.support_lo() << ", " << v.support_hi() << "]"
                << (failing.empty() ? std::string() : "; failing " + failing) << ")");
    }

    void require_symmetric( const BraidingData& B, const FockVector& psi, const char* where )
    {
      if ( psi.leg() != B.leg() )
        RSF_THROW(Structural, where << ": Fock vector over a different leg space than the braiding");
      if ( psi.leakage() > 0.0 )
        RSF_THROW(Precondition, where << ": Fock vector carries truncation leakage " << psi.leakage());
      const double r = symmetry_residual(B, psi);
      if ( r > symmetry_slack * std::max(1.0, psi.norm()) )
        RSF_THROW_RESIDUAL(Precondition, r, where << ": Fock vector is not R-symmetric");
    }

    void require_commutator_capacity( double log2_entries, const char* where )
    {
      if ( log2_entries > max_log2_commutator_size )
        RSF_THROW(Capacity, where << ": intermediate tensors need 2^" << log2_entries << " entries (limit 2^"
                  << max_log2_commutator_size << ")");
    }

    std::vector<LegGroup> nonempty_groups( std::vector<LegGroup> groups )
    {
      groups.erase(std::remove_if(groups.begin(), groups.end(), []( const LegGroup& g ) { return g.count == 0; }),
                   groups.end());
      return groups;
    }

    // Multiplies every entry of X by the product over legs of per-leg factors.
    LeggedTensor apply_leg_diagonal( const LeggedTensor& X, const std::vector<std::vector<cplx>>& factors )
    {
      LeggedTensor Y = X;
      const int r = X.rank();
      if ( r == 0 )
        return Y;
      std::vector<int> idx(static_cast<std::size_t>(r), 0);
      for ( std::size_t flat = 0; flat < Y.size(); ++flat ) {
        cplx c = 1.0;
        for ( int k = 0; k < r; ++k )
          c *= factors[static_cast<std::size_t>(k)][static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
        Y[flat] *= c;
        for ( int k = r - 1; k >= 0; --k ) {
          auto& i = idx[static_cast<std::size_t>(k)];
          if ( ++i < X.leg(k).dim() )
            break;
          i = 0;
        }
      }
      return Y;
    }

    LeggedTensor normalized_gaussian( const LegSpace& leg )
    {
      LeggedTensor h({leg});
      for ( int k = 0; k < leg.G(); ++k ) {
        const double q = leg.grid().node(k);
        for ( int a = 0; a < leg.d(); ++a )
          h[static_cast<std::size_t>(leg.index(k, a))] = cplx(std::exp(-0.5 * q * q) * (1.0 + 0.25 * a), 0.1 * a);
      }
      h *= cplx(1.0 / h.norm());
      return h;
    }

    MatrixScatteringFunction identity_lr( const InternalIndexSpace& plus, const InternalIndexSpace& minus )
    {
      const int n = plus.dim() * minus.dim();
      return MatrixScatteringFunction::left_right(plus, minus, [n]( cplx ) -> CMatrix {
        return CMatrix::Identity(n, n);
      }, "identity_lr");
    }

    CMatrix kron( const CMatrix& A, const CMatrix& B )
    {
      CMatrix K(A.rows() * B.rows(), A.cols() * B.cols());
      for ( Eigen::Index i = 0; i < A.rows(); ++i )
        for ( Eigen::Index j = 0; j < A.cols(); ++j )
          K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
      return K;
    }

  }

  //////////////////////////////////////////////////////////////////////////////
  // LocalizedVector

  LocalizedVector localized_transform( const InternalIndexSpace& idx, std::vector<TestFunction> gs, double tol,
                                       const TransformOptions& opt, const MembershipConfig& cfg )
  {
    if ( gs.empty() )
      RSF_THROW(Structural, "localized_transform: no test functions");
    LocalizedVector v(h_vector(idx, gs, opt));
    v.m_lo = std::numeric_limits<double>::infinity();
    v.m_hi = -std::numeric_limits<double>::infinity();
    for ( const auto& g : gs ) {
      v.m_lo = std::min(v.m_lo, g.lo);
      v.m_hi = std::max(v.m_hi, g.hi);
    }
    try {
      v.m_certificate = check_H_membership(v.m_f, tol, cfg);
    } catch ( const Error& e ) {
      // Transforms of left-supported functions grow inside the strip; an
      // evaluation failure there means the vector cannot be certified.
      if ( e.code() != ErrorCode::Numerical && e.code() != ErrorCode::Domain )
        throw;
      v.m_certificate = {error_entry("H.membership", e, tol)};
    }
    const bool members = std::all_of(v.m_certificate.begin(), v.m_certificate.end(),
                                     []( const ReportEntry& e ) { return e.pass; });
    v.m_expect = (members && v.m_lo >= 0.0) ? Expectation::Local : Expectation::NegativeControl;
    return v;
  }

  //////////////////////////////////////////////////////////////////////////////
  // A-operators

  TwoLegOperator ll_operator( const MatrixScatteringFunction& R )
  {
    if ( R.kind() == DeclaredKind::LR )
      RSF_THROW(Structural, "ll_operator: '" << R.label() << "' is a left-right function");
    return TwoLegOperator::kernel([R]( double qa, double qb ) { return R.eval_r(cplx(qa - qb, 0.0)); });
  }

  TwoLegOperator lr_operator( const MatrixScatteringFunction& S )
  {
    if ( S.kind() != DeclaredKind::LR )
      RSF_THROW(Structural, "lr_operator: '" << S.label() << "' is not a left-right function");
    return TwoLegOperator::kernel([S]( double qa, double qb ) { return S.eval(cplx(qa + qb, 0.0)); });
  }

  AOperator::AOperator( std::vector<ChainFactor> chain, int position, LeggedTensor f, LeggedTensor g )
    : m_chain(std::move(chain)), m_pos(position), m_f(std::move(f)), m_h(conjugate_bar_all_legs(g))
  {
    if ( m_f.rank() != 1 || m_h.rank() != 1 || m_f.leg(0) != m_h.leg(0) )
      RSF_THROW(Structural, "AOperator: f and g must be one-particle tensors over the same leg space");
    if ( m_pos < 0 )
      RSF_THROW(Structural, "AOperator: negative insertion position");
    for ( const auto& c : m_chain )
      if ( c.op.is_dense() || c.op.swaps() )
        RSF_THROW(Structural, "AOperator: chain factors must be pointwise kernels without leg swap");
  }

  LeggedTensor AOperator::apply( const LeggedTensor& X ) const
  {
    LeggedTensor E = insert_leg(X, m_f, m_pos);
    for ( auto it = m_chain.rbegin(); it != m_chain.rend(); ++it )
      E = it->op.apply(E, it->i, it->j);
    return contract_bra(m_h, m_pos, E);
  }

  LeggedTensor AOperator::apply_adjoint( const LeggedTensor& Y ) const
  {
    LeggedTensor E = insert_leg(Y, m_h, m_pos);
    for ( const auto& c : m_chain )
      E = c.op.adjoint().apply(E, c.i, c.j);
    return contract_bra(m_f, m_pos, E);
  }

  std::vector<ChainFactor> lemma_chain( const MatrixScatteringFunction& R, int n )
  {
    if ( n < 0 )
      RSF_THROW(Structural, "lemma_chain: negative level");
    const TwoLegOperator op = ll_operator(R);
    std::vector<ChainFactor> c;
    for ( int j = n; j >= 1; --j )
      c.push_back({op, 0, j});
    return c;
  }

  std::vector<ChainFactor> left_twist_chain( const MatrixScatteringFunction& Rp, const MatrixScatteringFunction& S,
                                             int m, int n )
  {
    if ( m < 0 || n < 0 )
      RSF_THROW(Structural, "left_twist_chain: negative level");
    const TwoLegOperator r = ll_operator(Rp), s = lr_operator(S);
    std::vector<ChainFactor> c;
    for ( int j = m + 1; j >= 2; --j )      // R+_{1,j|}
      c.push_back({r, 0, j - 1});
    for ( int j = 1; j <= n; ++j )          // S_{1|j}
      c.push_back({s, 0, m + j});
    return c;
  }

  std::vector<ChainFactor> right_twist_chain( const MatrixScatteringFunction& Rm, const MatrixScatteringFunction& S,
                                              int m, int n )
  {
    if ( m < 0 || n < 0 )
      RSF_THROW(Structural, "right_twist_chain: negative level");
    const TwoLegOperator r = ll_operator(Rm), s = lr_operator(S);
    std::vector<ChainFactor> c;
    for ( int j = n + 1; j >= 2; --j )      // R-_{|1,j}
      c.push_back({r, m, m + j - 1});
    for ( int i = 1; i <= m; ++i )          // S_{i|1}
      c.push_back({s, i - 1, m});
    return c;
  }

  AOperatorCheck a_operator( const std::vector<ChainFactor>& chain, int position, const LocalizedVector& f,
                             const LocalizedVector& g, const LegSpace& leg, const std::vector<LegGroup>& groups,
                             bool allow_control )
  {
    require_certified(f, "f", allow_control, "a_operator");
    require_certified(g, "g", allow_control, "a_operator");
    int rank = 1;
    for ( const auto& gr : groups )
      rank += gr.count;
    for ( const auto& c : chain )
      if ( c.i < 0 || c.j < 0 || c.i >= rank || c.j >= rank || c.i == c.j )
        RSF_THROW(Structural, "a_operator: factor on legs (" << c.i << ", " << c.j << ") invalid for "
                  << rank << " legs");
    const AOperator A(chain, position, f.sample(leg), g.sample(leg));
    const auto ng = nonempty_groups(groups);
    AOperatorCheck out;
    out.blocks = for_each_orbit_block(ng, [&A]( const LeggedTensor& X ) { return A.apply(X); },
                                      [&out]( const CMatrix& M ) { out.norm = std::max(out.norm, spectral_norm(M)); });
    for_each_orbit_block(ng, [&A]( const LeggedTensor& X ) { return A.apply(X) - A.apply_adjoint(X); },
                         [&out]( const CMatrix& M ) { out.asymmetry = std::max(out.asymmetry, spectral_norm(M)); });
    out.residual = out.norm > 0.0 ? out.asymmetry / out.norm : out.asymmetry;
    return out;
  }

  //////////////////////////////////////////////////////////////////////////////
  // Field commutators

  namespace {

    // Level-wise composition [V, U] X for block creation/annihilation parts
    // with the block length k. Results are keyed by the new block length.
    struct BlockOps {
      std::function<LeggedTensor(const LeggedTensor&, int)> u_create, u_annihilate, v_create, v_annihilate;
    };

    void composition( const BlockOps& ops, const LeggedTensor& X, int k, std::map<int, LeggedTensor>& level,
                      std::map<int, LeggedTensor>& up, std::map<int, LeggedTensor>& down )
    {
      auto add = []( std::map<int, LeggedTensor>& m, int key, const LeggedTensor& T, double sign ) {
        auto it = m.find(key);
        if ( it == m.end() ) {
          LeggedTensor c = T;
          c *= cplx(sign);
          m.emplace(key, std::move(c));
        } else if ( sign > 0 ) {
          it->second += T;
        } else {
          it->second -= T;
        }
      };
      const LeggedTensor uc = ops.u_create(X, k);
      const LeggedTensor vc = ops.v_create(X, k);
      add(up, k + 2, ops.v_create(uc, k + 1), 1.0);
      add(up, k + 2, ops.u_create(vc, k + 1), -1.0);
      add(level, k, ops.v_annihilate(uc, k + 1), 1.0);
      add(level, k, ops.u_annihilate(vc, k + 1), -1.0);
      if ( k >= 1 ) {
        const LeggedTensor ua = ops.u_annihilate(X, k);
        const LeggedTensor va = ops.v_annihilate(X, k);
        add(level, k, ops.v_create(ua, k - 1), 1.0);
        add(level, k, ops.u_create(va, k - 1), -1.0);
        if ( k >= 2 ) {
          add(down, k - 2, ops.v_annihilate(ua, k - 1), 1.0);
          add(down, k - 2, ops.u_annihilate(va, k - 1), -1.0);
        }
      }
    }

    double map_norm2( const std::map<int, LeggedTensor>& m )
    {
      double s = 0.0;
      for ( const auto& [k, T] : m ) {
        const double v = T.norm();
        s += v * v;
      }
      return s;
    }

  }

  CommutatorResult half_line_commutator( const BraidingData& B, const LocalizedVector& f, const LocalizedVector& g,
                                         const FockVector& psi, bool allow_control )
  {
    require_certified(f, "f", allow_control, "half_line_commutator");
    require_certified(g, "g", allow_control, "half_line_commutator");
    require_symmetric(B, psi, "half_line_commutator");
    const LeggedTensor fs = f.sample(B.leg()), gs = g.sample(B.leg());

    BlockOps ops;
    ops.u_create = [&]( const LeggedTensor& X, int k ) { return block_create(B, fs, X, 0, k, Symmetry::Enforced); };
    ops.u_annihilate = [&]( const LeggedTensor& X, int k ) { return block_annihilate(fs, X, 0, k); };
    ops.v_create = [&]( const LeggedTensor& X, int k ) {
      return block_reflected_create(B, gs, X, 0, k, Symmetry::Enforced);
    };
    ops.v_annihilate = [&]( const LeggedTensor& X, int k ) { return block_reflected_annihilate(gs, X, 0, k); };

    std::map<int, LeggedTensor> level, up, down, closed;
    double weighted = 0.0;
    for ( int n = 0; n <= psi.nmax(); ++n ) {
      const LeggedTensor& X = psi.level(n);
      const double xn = X.norm();
      weighted += (n + 1.0) * (n + 1.0) * xn * xn;
      if ( xn == 0.0 )
        continue;
      require_commutator_capacity((n + 2) * std::log2(static_cast<double>(B.leg().dim())), "half_line_commutator");
      composition(ops, X, n, level, up, down);
      const AOperator A(lemma_chain(B.function(), n), 0, fs, gs);
      LeggedTensor c = A.apply(X) - A.apply_adjoint(X);
      auto it = closed.find(n);
      if ( it == closed.end() )
        closed.emplace(n, std::move(c));
      else
        it->second += c;
    }
    CommutatorResult out;
    out.normalization = fs.norm() * gs.norm() * std::sqrt(weighted);
    if ( !(out.normalization > 0.0) )
      RSF_THROW(Domain, "half_line_commutator: zero normalization (f, g or Psi vanishes)");
    // The total commutator collects all three level shifts.
    std::map<int, LeggedTensor> total = level;
    double route2 = 0.0;
    for ( const auto& [k, T] : level ) {
      auto it = closed.find(k);
      const double v = it == closed.end() ? T.norm() : (T - it->second).norm();
      route2 += v * v;
    }
    const double up2 = map_norm2(up), down2 = map_norm2(down);
    // Levels k of `up`, `level`, `down` can coincide for different n; sum them.
    for ( const auto* part : {&up, &down} )
      for ( const auto& [k, T] : *part ) {
        auto it = total.find(k);
        if ( it == total.end() )
          total.emplace(k, T);
        else
          it->second += T;
      }
    out.residual = std::sqrt(map_norm2(total)) / out.normalization;
    out.route_residual = std::sqrt(route2 + up2 + down2) / out.normalization;
    out.creation = std::sqrt(up2) / out.normalization;
    out.annihilation = std::sqrt(down2) / out.normalization;
    return out;
  }

  //////////////////////////////////////////////////////////////////////////////
  // TwistOperator

  TwistOperator::TwistOperator( const MatrixScatteringFunction& S, const LegSpace& plus, const LegSpace& minus,
                                int m, int n )
    : TwistOperator(with_order(S, plus, minus, m, n, standard_order(m, n)))
  {
  }

  std::vector<std::pair<int,int>> TwistOperator::standard_order( int m, int n )
  {
    std::vector<std::pair<int,int>> f;
    for ( int j = 1; j <= n; ++j )
      for ( int i = 1; i <= m; ++i )
        f.emplace_back(i, j);
    return f;
  }

  TwistOperator TwistOperator::with_order( const MatrixScatteringFunction& S, const LegSpace& plus,
                                           const LegSpace& minus, int m, int n,
                                           std::vector<std::pair<int,int>> factors )
  {
    if ( m < 0 || n < 0 )
      RSF_THROW(Structural, "twist: negative level (" << m << ", " << n << ")");
    if ( S.kind() != DeclaredKind::LR )
      RSF_THROW(Structural, "twist: '" << S.label() << "' is not a left-right function");
    if ( S.d_left() != plus.d() || S.d_right() != minus.d() )
      RSF_THROW(Structural, "twist: S acts on C^" << S.d_left() << " (x) C^" << S.d_right()
                << ", legs have dimensions " << plus.d() << " and " << minus.d());
    const double work = m * std::log2(static_cast<double>(plus.dim()))
                      + n * std::log2(static_cast<double>(minus.dim()));
    if ( work > LeggedTensor::max_log2_size )
      RSF_THROW(Capacity, "twist: level (" << m << ", " << n << ") needs 2^" << work << " entries (limit 2^"
                << LeggedTensor::max_log2_size << ")");
    for ( const auto& [i, j] : factors )
      if ( i < 1 || i > m || j < 1 || j > n )
        RSF_THROW(Structural, "twist: factor S_{" << i << "|" << j << "} outside level (" << m << ", " << n << ")");
    const TwoLegOperator op = lr_operator(S);
    return TwistOperator(op, op.adjoint(), plus, minus, m, n, std::move(factors));
  }

  TwistOperator::TwistOperator( TwoLegOperator S, TwoLegOperator Sadj, LegSpace plus, LegSpace minus, int m, int n,
                                std::vector<std::pair<int,int>> factors )
    : m_S(std::move(S)), m_Sadj(std::move(Sadj)), m_plus(std::move(plus)), m_minus(std::move(minus)),
      m_m(m), m_n(n), m_factors(std::move(factors))
  {
  }

  LeggedTensor TwistOperator::apply( const LeggedTensor& X ) const
  {
    if ( X.rank() != m_m + m_n )
      RSF_THROW(Structural, "twist: tensor of rank " << X.rank() << " at level (" << m_m << ", " << m_n << ")");
    LeggedTensor Y = X;
    for ( auto it = m_factors.rbegin(); it != m_factors.rend(); ++it )
      Y = m_S.apply(Y, it->first - 1, m_m + it->second - 1);
    return Y;
  }

  LeggedTensor TwistOperator::apply_adjoint( const LeggedTensor& X ) const
  {
    if ( X.rank() != m_m + m_n )
      RSF_THROW(Structural, "twist: tensor of rank " << X.rank() << " at level (" << m_m << ", " << m_n << ")");
    LeggedTensor Y = X;
    for ( const auto& [i, j] : m_factors )
      Y = m_Sadj.apply(Y, i - 1, m_m + j - 1);
    return Y;
  }

  std::vector<LegGroup> TwistOperator::groups() const
  {
    return nonempty_groups({{m_plus, m_m}, {m_minus, m_n}});
  }

  double twist_unitarity_residual( const TwistOperator& T )
  {
    if ( T.m() + T.n() == 0 )
      return 0.0;
    return orbit_operator_norm(T.groups(), [&T]( const LeggedTensor& X ) {
      return T.apply_adjoint(T.apply(X)) - X;
    });
  }

  ProjectorCommutation twist_projector_commutation( const MatrixScatteringFunction& Rp,
                                                    const MatrixScatteringFunction& S,
                                                    const MatrixScatteringFunction& Rm, int m, int n,
                                                    const RapidityGrid& grid )
  {
    const BraidingData Bp = braiding(Rp, grid), Bm = braiding(Rm, grid);
    const TwistOperator T(S, Bp.leg(), Bm.leg(), m, n);
    ProjectorCommutation out;
    if ( m + n == 0 )
      return out;
    out.left = orbit_operator_norm(T.groups(), [&]( const LeggedTensor& X ) {
      return T.apply(block_projector(Bp, X, 0, m)) - block_projector(Bp, T.apply(X), 0, m);
    });
    out.right = orbit_operator_norm(T.groups(), [&]( const LeggedTensor& X ) {
      return T.apply(block_projector(Bm, X, m, n)) - block_projector(Bm, T.apply(X), m, n);
    });
    return out;
  }

  //////////////////////////////////////////////////////////////////////////////
  // Twisted commutators

  const char* side_name( Side s )
  {
    return s == Side::Left ? "left" : "right";
  }

  CommutatorResult twisted_commutator( const BraidingData& Bp, const MatrixScatteringFunction& S,
                                       const BraidingData& Bm, const LocalizedVector& f, const LocalizedVector& g,
                                       const FockVector& psi, const FockVector& phi, Side side,
                                       bool allow_control )
  {
    require_certified(f, "f", allow_control, "twisted_commutator");
    require_certified(g, "g", allow_control, "twisted_commutator");
    require_symmetric(Bp, psi, "twisted_commutator (left factor)");
    require_symmetric(Bm, phi, "twisted_commutator (right factor)");
    const bool left = side == Side::Left;
    const BraidingData& B = left ? Bp : Bm;
    const LeggedTensor fs = f.sample(B.leg()), gs = g.sample(B.leg());
    const LegSpace plus = Bp.leg(), minus = Bm.leg();

    std::map<int, LeggedTensor> level;
    double route2 = 0.0, up2 = 0.0, down2 = 0.0, weighted = 0.0;
    for ( int m = 0; m <= psi.nmax(); ++m ) {
      for ( int n = 0; n <= phi.nmax(); ++n ) {
        const double pm = psi.level(m).norm(), pn = phi.level(n).norm();
        const int acted = left ? m : n;
        weighted += (acted + 1.0) * (acted + 1.0) * pm * pm * pn * pn;
        if ( pm == 0.0 || pn == 0.0 )
          continue;
        const int mm = left ? m + 2 : m, nn = left ? n : n + 2;
        require_commutator_capacity(mm * std::log2(static_cast<double>(plus.dim()))
                                    + nn * std::log2(static_cast<double>(minus.dim())), "twisted_commutator");
        const LeggedTensor X = tensor_product(psi.level(m), phi.level(n));
        // Block geometry: the acted block has length k; the other is fixed.
        const int off = left ? 0 : m;
        auto twist_at = [&]( int k ) {
          return left ? TwistOperator(S, plus, minus, k, n) : TwistOperator(S, plus, minus, m, k);
        };
        BlockOps ops;
        ops.u_create = [&]( const LeggedTensor& Y, int k ) {
          return twist_at(k + 1).apply(block_create(B, fs, twist_at(k).apply_adjoint(Y), off, k, Symmetry::Enforced));
        };
        ops.u_annihilate = [&]( const LeggedTensor& Y, int k ) {
          return twist_at(k - 1).apply(block_annihilate(fs, twist_at(k).apply_adjoint(Y), off, k));
        };
        ops.v_create = [&]( const LeggedTensor& Y, int k ) {
          return block_reflected_create(B, gs, Y, off, k, Symmetry::Enforced);
        };
        ops.v_annihilate = [&]( const LeggedTensor& Y, int k ) { return block_reflected_annihilate(gs, Y, off, k); };

        std::map<int, LeggedTensor> lv, u, d;
        composition(ops, X, acted, lv, u, d);
        const AOperator A(left ? left_twist_chain(Bp.function(), S, m, n) : right_twist_chain(Bm.function(), S, m, n),
                          left ? 0 : m, fs, gs);
        const LeggedTensor closed = A.apply(X) - A.apply_adjoint(X);
        const LeggedTensor& comp = lv.at(acted);
        const double r = (comp - closed).norm();
        route2 += r * r;
        const double un = map_norm2(u), dn = map_norm2(d);
        up2 += un;
        down2 += dn;
        // Distinct (m, n) inputs are orthogonal components; their images at
        // a common output level add up, collected below by output level.
        for ( auto* part : {&lv, &u, &d} )
          for ( auto& [k, T] : *part ) {
            const int om = left ? k : m, on = left ? n : k;
            const int key = om * (phi.nmax() + psi.nmax() + 3) + on;
            auto it = level.find(key);
            if ( it == level.end() )
              level.emplace(key, T);
            else
              it->second += T;
          }
      }
    }
    CommutatorResult out;
    out.normalization = fs.norm() * gs.norm() * std::sqrt(weighted);
    if ( !(out.normalization > 0.0) )
      RSF_THROW(Domain, "twisted_commutator: zero normalization (f, g or the Fock vectors vanish)");
    out.residual = std::sqrt(map_norm2(level)) / out.normalization;
    out.route_residual = std::sqrt(route2 + up2 + down2) / out.normalization;
    out.creation = std::sqrt(up2) / out.normalization;
    out.annihilation = std::sqrt(down2) / out.normalization;
    return out;
  }

  //////////////////////////////////////////////////////////////////////////////
  // Bundles

  const char* bundle_kind_name( BundleKind k )
  {
    return k == BundleKind::Massless ? "massless" : "massive";
  }

  double Generator::value( int alpha, double q ) const
  {
    return coefficients[static_cast<std::size_t>(alpha)] * std::exp(exponent * q);
  }

  TripleBundle::TripleBundle( BundleKind kind, ChiralSide plus, ChiralSide minus,
                              std::optional<MatrixScatteringFunction> S )
    : m_kind(kind), m_plus(std::move(plus)), m_minus(std::move(minus)),
      m_S(S ? *S : identity_lr(m_plus.R.left_space(), m_minus.R.left_space())), m_has_S(S.has_value())
  {
    for ( const ChiralSide* side : {&m_plus, &m_minus} ) {
      if ( side->R.kind() == DeclaredKind::LR )
        RSF_THROW(Structural, "bundle: chiral side '" << side->R.label() << "' must be a left-left function");
      if ( side->nmax < 0 )
        RSF_THROW(Structural, "bundle: negative particle bound");
    }
    if ( m_S.kind() != DeclaredKind::LR )
      RSF_THROW(Structural, "bundle: '" << m_S.label() << "' is not a left-right function");
    if ( m_S.d_left() != m_plus.R.d_left() || m_S.d_right() != m_minus.R.d_left() )
      RSF_THROW(Structural, "bundle: S acts on C^" << m_S.d_left() << " (x) C^" << m_S.d_right()
                << " but the sides have dimensions " << m_plus.R.d_left() << " and " << m_minus.R.d_left());
    for ( ChiralSide* side : {&m_plus, &m_minus} ) {
      const int d = side->R.d_left();
      if ( kind == BundleKind::Massless ) {
        if ( !side->masses.empty() )
          RSF_THROW(Structural, "bundle: masses given for a massless bundle");
        continue;
      }
      if ( side->masses.empty() )
        side->masses.assign(static_cast<std::size_t>(d), 1.0);
      if ( static_cast<int>(side->masses.size()) != d )
        RSF_THROW(Structural, "bundle: " << side->masses.size() << " masses for " << d << " internal indices");
      for ( double mass : side->masses )
        if ( !std::isfinite(mass) || !(mass > 0.0) )
          RSF_THROW(Domain, "bundle: masses must be finite and positive (got " << mass << ")");
    }
    auto ones = []( int d ) { return std::vector<double>(static_cast<std::size_t>(d), 1.0); };
    auto squares = []( const std::vector<double>& m ) {
      std::vector<double> out;
      for ( double v : m )
        out.push_back(v * v);
      return out;
    };
    m_generators.push_back({"T+", Side::Left, +1, ones(m_plus.R.d_left())});
    m_generators.push_back({"T-", Side::Right, +1, ones(m_minus.R.d_left())});
    if ( kind == BundleKind::Massive ) {
      m_generators.push_back({"T+'", Side::Left, -1, squares(m_plus.masses)});
      m_generators.push_back({"T-'", Side::Right, -1, squares(m_minus.masses)});
    }
  }

  TripleBundle TripleBundle::massless( ChiralSide plus, ChiralSide minus, std::optional<MatrixScatteringFunction> S )
  {
    return TripleBundle(BundleKind::Massless, std::move(plus), std::move(minus), std::move(S));
  }

  TripleBundle TripleBundle::massive( ChiralSide plus, ChiralSide minus, std::optional<MatrixScatteringFunction> S )
  {
    return TripleBundle(BundleKind::Massive, std::move(plus), std::move(minus), std::move(S));
  }

  cplx TripleBundle::translation_phase( Side side, int alpha, double q, double tp, double tm ) const
  {
    // T(t+, t-) = T+(t+) T+'(t-) (x) T-'(t+) T-(t-); massless: T+(t+) (x) T-(t-).
    double phase = 0.0;
    for ( const auto& g : m_generators ) {
      if ( g.side != side )
        continue;
      const bool primed = g.exponent < 0;
      const double t = (side == Side::Left) != primed ? tp : tm;
      phase += t * g.value(alpha, q);
    }
    return std::polar(1.0, phase);
  }

  std::pair<LocalizedVector, LocalizedVector> default_locality_pair( const InternalIndexSpace& idx,
                                                                     const AssemblyConfig& cfg )
  {
    std::vector<TestFunction> fs, gs;
    for ( int a = 0; a < idx.dim(); ++a ) {
      TestFunction f = cfg.f_bump, g = cfg.g_bump;
      const double shift = cfg.component_shift * a;
      auto shifted = [shift]( TestFunction t ) {
        TestFunction out = t;
        out.g = [inner = t.g, shift]( double x ) { return inner(x - shift); };
        out.lo += shift;
        out.hi += shift;
        return out;
      };
      fs.push_back(shifted(f));
      gs.push_back(shifted(g));
    }
    return {localized_transform(idx, fs), localized_transform(idx, gs)};
  }

  namespace {

    RapidityGrid algebraic_grid( const ChiralSide& side, const AssemblyConfig& cfg )
    {
      return RapidityGrid::gauss_legendre(cfg.algebraic_nodes, side.grid.qmax());
    }

    const std::vector<std::pair<int,int>> commutation_levels{{1, 1}, {2, 1}, {1, 2}};
    const std::vector<std::pair<int,int>> projector_levels{{2, 1}, {1, 2}, {2, 2}};

    // max over levels and translations of || [S~, T(t+, t-)] || (orbit blocks).
    ReportEntry translation_commutation( const TripleBundle& b, const AssemblyConfig& cfg, const std::string& axiom )
    {
      const LegSpace plus(b.plus().R.index_space(), algebraic_grid(b.plus(), cfg));
      const LegSpace minus(b.minus().R.index_space(), algebraic_grid(b.minus(), cfg));
      double r = 0.0;
      std::size_t samples = 0;
      for ( const auto& [m, n] : commutation_levels ) {
        const TwistOperator T(b.S(), plus, minus, m, n);
        for ( const auto& [tp, tm] : cfg.translations ) {
          auto translate = [&]( const LeggedTensor& X ) {
            std::vector<std::vector<cplx>> factors;
            for ( int k = 0; k < X.rank(); ++k ) {
              const LegSpace& leg = X.leg(k);
              const Side side = k < m ? Side::Left : Side::Right;
              std::vector<cplx> f(static_cast<std::size_t>(leg.dim()));
              for ( int node = 0; node < leg.G(); ++node )
                for ( int a = 0; a < leg.d(); ++a )
                  f[static_cast<std::size_t>(leg.index(node, a))] =
                    b.translation_phase(side, a, leg.grid().node(node), tp, tm);
              factors.push_back(std::move(f));
            }
            return apply_leg_diagonal(X, factors);
          };
          samples += for_each_orbit_block(T.groups(), [&]( const LeggedTensor& X ) {
            return T.apply(translate(X)) - translate(T.apply(X));
          }, [&r]( const CMatrix& M ) { r = std::max(r, spectral_norm(M)); });
        }
      }
      return make_entry(axiom, r, samples, cfg.commutation_tol);
    }

    void add_twist_structure( ValidationReport& rep, const TripleBundle& b, const AssemblyConfig& cfg,
                              const std::string& prefix )
    {
      const LegSpace plus(b.plus().R.index_space(), algebraic_grid(b.plus(), cfg));
      const LegSpace minus(b.minus().R.index_space(), algebraic_grid(b.minus(), cfg));
      // S^{(0,0)} on the vacuum, S^{(m,0)} and S^{(0,n)} on the one-sided subspaces.
      const LeggedTensor vac = LeggedTensor::scalar(1.0);
      const double rv = (TwistOperator(b.S(), plus, minus, 0, 0).apply(vac) - vac).norm();
      rep.add(make_entry(prefix + ".vacuum_fixed", rv, 1, cfg.commutation_tol));
      double r = 0.0;
      std::size_t samples = 0;
      for ( const auto& [m, n] : std::vector<std::pair<int,int>>{{1, 0}, {2, 0}, {0, 1}, {0, 2}} ) {
        const TwistOperator T(b.S(), plus, minus, m, n);
        samples += for_each_orbit_block(T.groups(), [&T]( const LeggedTensor& X ) { return T.apply(X) - X; },
                                        [&r]( const CMatrix& M ) { r = std::max(r, spectral_norm(M)); });
      }
      rep.add(make_entry(prefix + ".one_sided_identity", r, samples, cfg.commutation_tol));
    }

    // Normalized a*(h) Omega with a smooth h (any one-particle vector is symmetric).
    FockVector one_particle_probe( const LegSpace& leg, int nmax )
    {
      return one_particle_state(leg, nmax, normalized_gaussian(leg));
    }

    // Twist/projector commutation and blockwise unitarity.
    void add_projector_commutation( ValidationReport& rep, const TripleBundle& b, const AssemblyConfig& cfg )
    {
      ProjectorCommutation worst;
      double unit = 0.0;
      std::size_t samples = 0;
      const RapidityGrid gp = algebraic_grid(b.plus(), cfg), gm = algebraic_grid(b.minus(), cfg);
      try {
        for ( const auto& [m, n] : projector_levels ) {
          const auto pc = twist_projector_commutation(b.plus().R, b.S(), b.minus().R, m, n, gp);
          worst.left = std::max(worst.left, pc.left);
          worst.right = std::max(worst.right, pc.right);
          const TwistOperator T(b.S(), LegSpace(b.plus().R.index_space(), gp),
                                LegSpace(b.minus().R.index_space(), gm), m, n);
          unit = std::max(unit, twist_unitarity_residual(T));
          ++samples;
        }
        rep.add(make_entry("twist.projector_commutation.left", worst.left, samples, cfg.commutation_tol,
                           "levels (2,1), (1,2), (2,2)"));
        rep.add(make_entry("twist.projector_commutation.right", worst.right, samples, cfg.commutation_tol,
                           "levels (2,1), (1,2), (2,2)"));
        rep.add(make_entry("twist.unitarity", unit, samples, cfg.commutation_tol));
      } catch ( const Error& e ) {
        rep.add(error_entry("twist.projector_commutation", e, cfg.commutation_tol));
      }
    }

    void add_twisted_locality( ValidationReport& rep, const TripleBundle& b, const AssemblyConfig& cfg )
    {
      // Twisted commutators on the bundle grid and on the halved grid.
      for ( Side side : {Side::Left, Side::Right} ) {
        const std::string name = std::string("twisted_commutator.") + side_name(side);
        try {
          const ChiralSide& acted = side == Side::Left ? b.plus() : b.minus();
          const auto [f, g] = default_locality_pair(acted.R.index_space(), cfg);
          const int G = acted.grid.size();
          std::vector<int> sizes{G};
          if ( G % 16 == 0 )
            sizes.insert(sizes.begin(), G / 2);
          CommutatorResult last;
          for ( int size : sizes ) {
            const RapidityGrid gpl = size == G ? b.plus().grid
                                               : RapidityGrid::gauss_legendre(size, b.plus().grid.qmax());
            const RapidityGrid gmi = size == G ? b.minus().grid
                                               : RapidityGrid::gauss_legendre(size, b.minus().grid.qmax());
            const BraidingData Bp = braiding(b.plus().R, gpl), Bm = braiding(b.minus().R, gmi);
            // The acted side starts at the vacuum, the spectator side carries one particle.
            const FockVector psi = side == Side::Left ? FockVector::vacuum(Bp.leg(), 0)
                                                      : one_particle_probe(Bp.leg(), 1);
            const FockVector phi = side == Side::Left ? one_particle_probe(Bm.leg(), 1)
                                                      : FockVector::vacuum(Bm.leg(), 0);
            last = twisted_commutator(Bp, b.S(), Bm, f, g, psi, phi, side);
            rep.series.push_back({name, size, last.residual});
          }
          rep.add(make_entry(name, last.residual, 1, cfg.locality_tol, "normalized by ||f|| ||g|| ||(N+1) Psi||"));
          rep.add(make_entry(name + ".route", last.route_residual, 1, cfg.commutation_tol,
                             "composition versus closed-form A - A*"));
          rep.add(make_entry(name + ".creation", last.creation, 1, 1e-12));
        } catch ( const Error& e ) {
          rep.add(error_entry(name, e, cfg.locality_tol));
        }
      }
    }

  }

  ValidationReport assemble_massless( const TripleBundle& bundle, const AssemblyConfig& cfg )
  {
    if ( bundle.kind() != BundleKind::Massless )
      RSF_THROW(Structural, "assemble_massless: bundle is massive");
    ValidationReport rep;
    rep.model_label = "massless(" + bundle.plus().R.label() + ", " + bundle.S().label() + ", "
                      + bundle.minus().R.label() + ")";
    rep.grid_description = bundle.plus().grid.describe();
    if ( cfg.structure ) {
      rep.add(translation_commutation(bundle, cfg, "massless.translation_commutation"));
      add_twist_structure(rep, bundle, cfg, "massless");
      add_projector_commutation(rep, bundle, cfg);
    }
    if ( cfg.locality )
      add_twisted_locality(rep, bundle, cfg);
    return rep;
  }

  CMatrix two_particle_smatrix( const TripleBundle& bundle, double q )
  {
    const MatrixScatteringFunction& S = bundle.S();
    const int dp = bundle.plus().R.d_left(), dm = bundle.minus().R.d_left(), D = dp + dm;
    const CMatrix Ip = CMatrix::Identity(D, D).leftCols(dp);
    const CMatrix Im = CMatrix::Identity(D, D).rightCols(dm);
    const CMatrix rp = bundle.plus().R.eval_r(cplx(-q, pi));
    const CMatrix rm = bundle.minus().R.eval_r(cplx(q, 0.0));
    const CMatrix s = S.eval(cplx(q, 0.0));
    // Same-side blocks: F R^T (row (r1, r2) reads the column (r2, r1) of R).
    const CMatrix Xpp = flip_matrix(dp) * rp.transpose();
    const CMatrix Xmm = flip_matrix(dm) * rm.transpose();
    // Mixed blocks: conj S composed with the flip H- (x) H+ -> H+ (x) H-, and
    // the flip after S^T in the other direction.
    const CMatrix Ypm = s.conjugate() * flip_matrix(dm, dp);
    const CMatrix Zmp = flip_matrix(dp, dm) * s.transpose();
    const CMatrix PP = kron(Ip, Ip), MM = kron(Im, Im), PM = kron(Ip, Im), MP = kron(Im, Ip);
    return PP * Xpp * PP.transpose() + MM * Xmm * MM.transpose() + PM * Ypm * MP.transpose()
         + MP * Zmp * PM.transpose();
  }

  ValidationReport assemble_massive( const TripleBundle& bundle, const AssemblyConfig& cfg )
  {
    if ( bundle.kind() != BundleKind::Massive )
      RSF_THROW(Structural, "assemble_massive: bundle is massless");
    ValidationReport rep;
    rep.model_label = "massive(" + bundle.plus().R.label() + ", " + bundle.S().label() + ", "
                      + bundle.minus().R.label() + ")";
    rep.grid_description = bundle.plus().grid.describe();

    // (i) Every generator multiplier strictly positive on the grid nodes.
    std::size_t bad = 0, samples = 0;
    for ( const auto& g : bundle.generators() ) {
      const ChiralSide& side = g.side == Side::Left ? bundle.plus() : bundle.minus();
      for ( double q : side.grid.nodes() )
        for ( int a = 0; a < static_cast<int>(g.coefficients.size()); ++a ) {
          ++samples;
          const double v = g.value(a, q);
          if ( !(v > 0.0) )
            ++bad;
        }
    }
    rep.add(make_entry("massive.spectrum_positivity", static_cast<double>(bad), samples, 0.0,
                       "number of non-positive generator multiplier values"));
    // (ii) S~ commutes with T~(t+, t-).
    rep.add(translation_commutation(bundle, cfg, "massive.translation_commutation"));
    // (iii) Mass compatibility of both chiral functions.
    for ( const auto& [side, name] : {std::pair{&bundle.plus(), "plus"}, std::pair{&bundle.minus(), "minus"}} ) {
      ReportEntry e = check_mass_compatibility(side->R, MassAssignment(side->R.index_space(), side->masses),
                                               side->grid, cfg.tol.algebraic);
      e.axiom = std::string("massive.mass_compatibility.") + name;
      rep.add(std::move(e));
    }
    // (iv) Two-particle S-matrix against the block-diagonal assembly.
    double r = 0.0;
    for ( double q : bundle.plus().grid.nodes() ) {
      const CMatrix A = assemble_block_diagonal(bundle.plus().R, bundle.S(), bundle.minus().R, q);
      r = std::max(r, (A - two_particle_smatrix(bundle, q)).cwiseAbs().maxCoeff());
    }
    rep.add(make_entry("massive.block_diagonal", r, bundle.plus().grid.nodes().size(), cfg.tol.algebraic));
    return rep;
  }

  //////////////////////////////////////////////////////////////////////////////
  // Field-locality series

  std::vector<LocalityRun> field_locality_series( const MatrixScatteringFunction& R, const LocalizedVector& f,
                                                  const LocalizedVector& g, const std::vector<int>& sizes,
                                                  double qmax, bool allow_control )
  {
    std::vector<LocalityRun> out;
    for ( int G : sizes ) {
      const BraidingData B = braiding(R, RapidityGrid::gauss_legendre(G, qmax));
      LocalityRun run{G, 0.0, 0.0};
      for ( const FockVector& psi : {FockVector::vacuum(B.leg(), 0), one_particle_probe(B.leg(), 1)} ) {
        const CommutatorResult c = half_line_commutator(B, f, g, psi, allow_control);
        run.residual = std::max(run.residual, c.residual);
        run.route_residual = std::max(run.route_residual, c.route_residual);
      }
      out.push_back(run);
    }
    return out;
  }

}
