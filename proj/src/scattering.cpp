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

#include "rsf/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rsf {

  namespace {

    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr double strip_slack = 1e-12;

    // Running maximum that treats NaN as +infinity.
    void update_max( double& acc, double v )
    {
      if ( std::isnan(v) )
        v = inf;
      acc = std::max(acc, v);
    }

    double max_abs_entry( const CMatrix& M )
    {
      double m = 0.0;
      for ( Eigen::Index i = 0; i < M.size(); ++i )
        update_max(m, std::abs(M.data()[i]));
      return m;
    }

    void check_shape( const CMatrix& M, int n, const std::string& label )
    {
      if ( M.rows() != n || M.cols() != n )
        RSF_THROW(Structural, "scattering function '" << label << "' returned a " << M.rows() << "x"
                  << M.cols() << " matrix, expected " << n << "x" << n);
    }

    const InternalIndexSpace& require_ll( const MatrixScatteringFunction& S, const char* what )
    {
      if ( S.kind() == DeclaredKind::LR )
        RSF_THROW(Structural, what << ": '" << S.label() << "' is a left-right function");
      return S.left_space();
    }

  }

  const char* kind_name( DeclaredKind k )
  {
    switch ( k ) {
    case DeclaredKind::LL: return "LL";
    case DeclaredKind::LR: return "LR";
    case DeclaredKind::Unconstrained: return "unconstrained";
    }
    return "?";
  }

  //////////////////////////////////////////////////////////////////////////////

  MatrixScatteringFunction::MatrixScatteringFunction( InternalIndexSpace idx, Evaluator eval_s,
                                                      std::string label, DeclaredKind kind )
    : m_left(idx), m_right(idx), m_eval(std::move(eval_s)), m_label(std::move(label)), m_kind(kind)
  {
    if ( kind == DeclaredKind::LR )
      RSF_THROW(Structural, "use MatrixScatteringFunction::left_right for LR functions");
    if ( !m_eval )
      RSF_THROW(Structural, "scattering function '" << m_label << "' has no evaluator");
  }

  MatrixScatteringFunction MatrixScatteringFunction::left_right( InternalIndexSpace plus,
                                                                 InternalIndexSpace minus,
                                                                 Evaluator eval, std::string label )
  {
    if ( !eval )
      RSF_THROW(Structural, "scattering function '" << label << "' has no evaluator");
    MatrixScatteringFunction f;
    f.m_left = std::move(plus);
    f.m_right = std::move(minus);
    f.m_eval = std::move(eval);
    f.m_label = std::move(label);
    f.m_kind = DeclaredKind::LR;
    return f;
  }

  MatrixScatteringFunction MatrixScatteringFunction::real_line_only() const
  {
    MatrixScatteringFunction f = *this;
    f.m_strip = false;
    return f;
  }

  const InternalIndexSpace& MatrixScatteringFunction::index_space() const
  {
    if ( !(m_left == m_right) )
      RSF_THROW(Structural, "scattering function '" << m_label << "' has different left and right spaces");
    return m_left;
  }

  CMatrix MatrixScatteringFunction::eval( cplx z ) const
  {
    if ( !(z.imag() >= -strip_slack && z.imag() <= pi + strip_slack) || !std::isfinite(z.real()) )
      RSF_THROW(Domain, "scattering function '" << m_label << "': argument " << z
                << " lies outside the strip 0 <= Im z <= pi");
    if ( !m_strip && std::abs(z.imag()) > strip_slack )
      RSF_THROW(InsufficientDomain, "scattering function '" << m_label
                << "' is only known on the real line, cannot evaluate at " << z);
    CMatrix M = m_eval(z);
    check_shape(M, d_left() * d_right(), m_label);
    return M;
  }

  CMatrix MatrixScatteringFunction::eval_r( cplx z ) const
  {
    if ( m_kind == DeclaredKind::LR )
      return eval(z);
    return swap_convention(eval(z), d_left());
  }

  //////////////////////////////////////////////////////////////////////////////

  CMatrix flip_matrix( int da, int db )
  {
    CMatrix F = CMatrix::Zero(da * db, da * db);
    for ( int a = 0; a < da; ++a )
      for ( int b = 0; b < db; ++b )
        F(b * da + a, a * db + b) = 1.0;
    return F;
  }

  CMatrix flip_matrix( int d ) { return flip_matrix(d, d); }

  CMatrix swap_convention( const CMatrix& M, int d )
  {
    check_shape(M, d * d, "swap_convention");
    CMatrix out(d * d, d * d);
    for ( int a = 0; a < d; ++a )
      for ( int b = 0; b < d; ++b )
        out.row(a * d + b) = M.row(b * d + a);
    return out;
  }

  CMatrix embed3( const CMatrix& M, int i, const std::array<int,3>& dims )
  {
    const int n = dims[0] * dims[1] * dims[2];
    if ( i != 0 && i != 1 )
      RSF_THROW(Structural, "embed3: factor index must be 0 or 1, got " << i);
    const int d_in = dims[static_cast<std::size_t>(i)] * dims[static_cast<std::size_t>(i + 1)];
    check_shape(M, d_in, "embed3");
    CMatrix out = CMatrix::Zero(n, n);
    if ( i == 0 ) {
      const int d2 = dims[2];
      for ( int r = 0; r < d_in; ++r )
        for ( int c = 0; c < d_in; ++c )
          for ( int k = 0; k < d2; ++k )
            out(r * d2 + k, c * d2 + k) = M(r, c);
    } else {
      const int d0 = dims[0];
      for ( int k = 0; k < d0; ++k )
        out.block(k * d_in, k * d_in, d_in, d_in) = M;
    }
    return out;
  }

  CMatrix embed3_outer( const CMatrix& M, const std::array<int,3>& dims )
  {
    const int d0 = dims[0], d1 = dims[1], d2 = dims[2];
    check_shape(M, d0 * d2, "embed3_outer");
    const int n = d0 * d1 * d2;
    CMatrix out = CMatrix::Zero(n, n);
    for ( int a = 0; a < d0; ++a )
      for ( int c = 0; c < d2; ++c )
        for ( int a2 = 0; a2 < d0; ++a2 )
          for ( int c2 = 0; c2 < d2; ++c2 )
            for ( int b = 0; b < d1; ++b )
              out((a * d1 + b) * d2 + c, (a2 * d1 + b) * d2 + c2) = M(a * d2 + c, a2 * d2 + c2);
    return out;
  }

  //////////////////////////////////////////////////////////////////////////////
  // Builders.

  ScalarFunction sinh_scalar( std::vector<double> blocks, int sign )
  {
    if ( sign != 1 && sign != -1 )
      RSF_THROW(Parameter, "sinh family: sign must be +1 or -1, got " << sign);
    for ( double b : blocks )
      if ( !(b > 0.0 && b < pi) )
        RSF_THROW(Parameter, "sinh family: block parameter b = " << b << " must lie in (0, pi)");
    std::vector<double> s;
    for ( double b : blocks )
      s.push_back(std::sin(b));
    return [s, sign]( cplx z ) {
      cplx v = static_cast<double>(sign);
      const cplx sh = std::sinh(z);
      for ( double sb : s )
        v *= (sh - I_unit * sb) / (sh + I_unit * sb);
      return v;
    };
  }

  MatrixScatteringFunction build_scalar_family( std::vector<double> blocks, int sign )
  {
    std::ostringstream label;
    label << "scalar_family(sign=" << sign << ", blocks=[";
    for ( std::size_t k = 0; k < blocks.size(); ++k )
      label << (k ? "," : "") << blocks[k];
    label << "])";
    auto f = sinh_scalar(std::move(blocks), sign);
    return MatrixScatteringFunction(InternalIndexSpace(1),
                                    [f]( cplx z ) { return CMatrix::Constant(1, 1, f(z)); },
                                    label.str());
  }

  MatrixScatteringFunction build_constant( const CMatrix& M, InternalIndexSpace idx, Convention conv,
                                           std::string label )
  {
    const int d = idx.dim();
    check_shape(M, d * d, label);
    CMatrix S = ( conv == Convention::S ) ? M : swap_convention(M, d);
    return MatrixScatteringFunction(std::move(idx), [S]( cplx ) { return S; }, std::move(label));
  }

  MatrixScatteringFunction build_constant_identity( InternalIndexSpace idx )
  {
    const int d = idx.dim();
    return build_constant(CMatrix::Identity(d * d, d * d), std::move(idx), Convention::R,
                          "constant_identity");
  }

  MatrixScatteringFunction build_scalar_times_identity( InternalIndexSpace idx, ScalarFunction s,
                                                        std::string label )
  {
    const int d = idx.dim();
    const CMatrix F = flip_matrix(d);
    return MatrixScatteringFunction(std::move(idx), [s, F]( cplx z ) -> CMatrix { return s(z) * F; },
                                    std::move(label));
  }

  MatrixScatteringFunction build_sinh_identity( InternalIndexSpace idx, std::vector<double> blocks,
                                                int sign )
  {
    std::ostringstream label;
    label << "sinh_identity(d=" << idx.dim() << ", sign=" << sign << ", blocks=[";
    for ( std::size_t k = 0; k < blocks.size(); ++k )
      label << (k ? "," : "") << blocks[k];
    label << "])";
    return build_scalar_times_identity(std::move(idx), sinh_scalar(std::move(blocks), sign), label.str());
  }

  MatrixScatteringFunction build_diagonal_family( InternalIndexSpace idx,
                                                  std::vector<std::vector<ScalarFunction>> eps,
                                                  std::string label )
  {
    const int d = idx.dim();
    if ( static_cast<int>(eps.size()) != d )
      RSF_THROW(Structural, "diagonal family: expected " << d << " rows of functions");
    for ( const auto& row : eps )
      if ( static_cast<int>(row.size()) != d )
        RSF_THROW(Structural, "diagonal family: expected " << d << " functions per row");
    return MatrixScatteringFunction(std::move(idx), [eps, d]( cplx z ) {
      // R^{ab}_{ab} = eps[a][b]; in the S-convention the entry sits in row (b, a).
      CMatrix S = CMatrix::Zero(d * d, d * d);
      for ( int a = 0; a < d; ++a )
        for ( int b = 0; b < d; ++b )
          S(b * d + a, a * d + b) = eps[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)](z);
      return S;
    }, std::move(label));
  }

  MatrixScatteringFunction build_on_template( InternalIndexSpace idx, ScalarFunction s1,
                                              ScalarFunction s2, ScalarFunction s3, std::string label )
  {
    const int d = idx.dim();
    return MatrixScatteringFunction(std::move(idx), [s1, s2, s3, d]( cplx z ) {
      const cplx v1 = s1(z), v2 = s2(z), v3 = s3(z);
      CMatrix S = CMatrix::Zero(d * d, d * d);
      for ( int a = 0; a < d; ++a )
        for ( int a2 = 0; a2 < d; ++a2 )
          for ( int b = 0; b < d; ++b )
            for ( int b2 = 0; b2 < d; ++b2 ) {
              cplx v = 0.0;
              if ( a == a2 && b == b2 ) v += v1;
              if ( a == b2 && a2 == b ) v += v2;
              if ( a == b && a2 == b2 ) v += v3;
              S(a * d + a2, b * d + b2) = v;
            }
      return S;
    }, std::move(label), DeclaredKind::Unconstrained);
  }

  MatrixScatteringFunction build_rotated( const MatrixScatteringFunction& R, const CMatrix& V )
  {
    const auto& idx = require_ll(R, "build_rotated");
    const int d = idx.dim();
    if ( V.rows() != d || V.cols() != d )
      RSF_THROW(Structural, "build_rotated: V is " << V.rows() << "x" << V.cols() << ", expected " << d << "x" << d);
    const double unitarity = spectral_norm(V * V.adjoint() - CMatrix::Identity(d, d));
    double bar = 0.0;
    for ( int a = 0; a < d; ++a )
      for ( int b = 0; b < d; ++b )
        update_max(bar, std::abs(V(idx.bar(a), idx.bar(b)) - std::conj(V(a, b))));
    const double r = std::max(unitarity, bar);
    if ( r > 1e-12 )
      RSF_THROW_RESIDUAL(Precondition, r, "build_rotated: V must be unitary and commute with the conjugation");
    CMatrix W(d * d, d * d);
    for ( int a = 0; a < d; ++a )
      for ( int b = 0; b < d; ++b )
        W.block(a * d, b * d, d, d) = V(a, b) * V;
    MatrixScatteringFunction in = R;
    MatrixScatteringFunction out(idx, [in, W]( cplx z ) -> CMatrix { return W * in.eval(z) * W.adjoint(); },
                                 "rotated(" + R.label() + ")", R.kind());
    return R.has_strip_domain() ? out : out.real_line_only();
  }

  MatrixScatteringFunction perturb_entry( const MatrixScatteringFunction& S, int row, int col, cplx factor )
  {
    const int n = S.d_left() * S.d_right();
    if ( row < 0 || row >= n || col < 0 || col >= n )
      RSF_THROW(Structural, "perturb_entry: entry (" << row << ", " << col << ") outside a " << n << "x" << n
                << " matrix");
    MatrixScatteringFunction in = S;
    auto eval = [in, row, col, factor]( cplx z ) -> CMatrix {
      CMatrix M = in.eval(z);
      M(row, col) *= factor;
      return M;
    };
    std::ostringstream label;
    label << "perturbed(" << S.label() << ", " << row << ", " << col << ")";
    MatrixScatteringFunction out = S.kind() == DeclaredKind::LR
      ? MatrixScatteringFunction::left_right(S.left_space(), S.right_space(), eval, label.str())
      : MatrixScatteringFunction(S.left_space(), eval, label.str(), S.kind());
    return S.has_strip_domain() ? out : out.real_line_only();
  }

  MatrixScatteringFunction build_flip_lr( const MatrixScatteringFunction& R, const RapidityGrid& grid,
                                          const Tolerances& tol )
  {
    const auto& idx = require_ll(R, "build_flip_lr");
    auto entries = ll_suite(R, grid, tol);
    entries.push_back(check_flip_symmetry(R, grid, tol.algebraic));
    double worst = 0.0;
    std::string failed;
    for ( const auto& e : entries ) {
      if ( !e.pass ) {
        update_max(worst, e.residual);
        failed += (failed.empty() ? "" : ", ") + e.axiom;
      }
    }
    if ( !failed.empty() )
      RSF_THROW_RESIDUAL(Precondition, worst, "build_flip_lr: '" << R.label()
                         << "' does not qualify (failing: " << failed << ")");
    MatrixScatteringFunction in = R;
    return MatrixScatteringFunction::left_right(idx, idx, [in]( cplx z ) { return in.eval_r(z); },
                                                "flip_lr(" + R.label() + ")");
  }

  CMatrix assemble_block_diagonal( const MatrixScatteringFunction& Rp, const MatrixScatteringFunction& S,
                                   const MatrixScatteringFunction& Rm, double q )
  {
    require_ll(Rp, "assemble_block_diagonal");
    require_ll(Rm, "assemble_block_diagonal");
    if ( S.kind() != DeclaredKind::LR )
      RSF_THROW(Structural, "assemble_block_diagonal: '" << S.label() << "' is not a left-right function");
    const int dp = Rp.d_left(), dm = Rm.d_left();
    if ( S.d_left() != dp || S.d_right() != dm )
      RSF_THROW(Structural, "assemble_block_diagonal: index spaces of S (" << S.d_left() << ","
                << S.d_right() << ") do not match R+ (" << dp << ") and R- (" << dm << ")");
    const int D = dp + dm;
    const CMatrix rpp = Rp.eval_r(cplx(-q, pi));   // R+'(q) = R+(i pi - q)
    const CMatrix rmm = Rm.eval_r(cplx(q, 0.0));
    const CMatrix s = S.eval(cplx(q, 0.0));
    auto pair = [D]( int u, int v ) { return u * D + v; };
    CMatrix out = CMatrix::Zero(D * D, D * D);
    // ++ block: row (r1, r2), column (c1, c2) holds R+'^{c1 c2}_{r2 r1}.
    for ( int r1 = 0; r1 < dp; ++r1 )
      for ( int r2 = 0; r2 < dp; ++r2 )
        for ( int c1 = 0; c1 < dp; ++c1 )
          for ( int c2 = 0; c2 < dp; ++c2 )
            out(pair(r1, r2), pair(c1, c2)) = rpp(c1 * dp + c2, r2 * dp + r1);
    // -- block, same pattern with R-(q).
    for ( int r1 = 0; r1 < dm; ++r1 )
      for ( int r2 = 0; r2 < dm; ++r2 )
        for ( int c1 = 0; c1 < dm; ++c1 )
          for ( int c2 = 0; c2 < dm; ++c2 )
            out(pair(dp + r1, dp + r2), pair(dp + c1, dp + c2)) = rmm(c1 * dm + c2, r2 * dm + r1);
    // Mixed blocks: row (a+, b-) x column (b'-, a'+) holds conj S^{ab}_{a'b'};
    // row (b'-, a'+) x column (a+, b-) holds S^{ab}_{a'b'}.
    for ( int a = 0; a < dp; ++a )
      for ( int b = 0; b < dm; ++b )
        for ( int a2 = 0; a2 < dp; ++a2 )
          for ( int b2 = 0; b2 < dm; ++b2 ) {
            const cplx v = s(a * dm + b, a2 * dm + b2);
            out(pair(a, dp + b), pair(dp + b2, a2)) = std::conj(v);
            out(pair(dp + b2, a2), pair(a, dp + b)) = v;
          }
    return out;
  }

  //////////////////////////////////////////////////////////////////////////////
  // Validators.

  ReportEntry check_unitarity( const MatrixScatteringFunction& S, const RapidityGrid& grid, double tol )
  {
    double r = 0.0;
    const int n = S.d_left() * S.d_right();
    for ( double q : grid.nodes() ) {
      const CMatrix M = S.eval(q);
      update_max(r, spectral_norm(M * M.adjoint() - CMatrix::Identity(n, n)));
    }
    return make_entry(S.kind() == DeclaredKind::LR ? "lr_unitarity" : "unitarity", r,
                      grid.nodes().size(), tol);
  }

  ReportEntry check_hermitian_analyticity( const MatrixScatteringFunction& S, const RapidityGrid& grid,
                                           double tol )
  {
    require_ll(S, "check_hermitian_analyticity");
    double r = 0.0;
    for ( double q : grid.nodes() )
      update_max(r, spectral_norm(S.eval(-q) - S.eval(q).adjoint()));
    return make_entry("hermitian_analyticity", r, grid.nodes().size(), tol);
  }

  ReportEntry check_ybe( const MatrixScatteringFunction& S, const RapidityGrid& grid, double tol )
  {
    const int d = require_ll(S, "check_ybe").dim();
    const std::array<int,3> dims{d, d, d};
    double r = 0.0;
    std::size_t samples = 0;
    for ( double q : grid.nodes() ) {
      const CMatrix a = S.eval(q);
      const CMatrix a12 = embed3(a, 0, dims), a23 = embed3(a, 1, dims);
      for ( double q2 : grid.nodes() ) {
        const CMatrix b = S.eval(q2), c = S.eval(q + q2);
        const CMatrix lhs = a12 * embed3(c, 1, dims) * embed3(b, 0, dims);
        const CMatrix rhs = embed3(b, 1, dims) * embed3(c, 0, dims) * a23;
        update_max(r, spectral_norm(lhs - rhs));
        ++samples;
      }
    }
    return make_entry("ybe", r, samples, tol);
  }

  ReportEntry check_tcp( const MatrixScatteringFunction& S, const RapidityGrid& grid, double tol )
  {
    const auto& idx = require_ll(S, "check_tcp");
    const int d = idx.dim();
    double r = 0.0;
    for ( double q : grid.nodes() ) {
      const CMatrix M = S.eval(q);
      for ( int a = 0; a < d; ++a )
        for ( int b = 0; b < d; ++b )
          for ( int c = 0; c < d; ++c )
            for ( int e = 0; e < d; ++e )
              update_max(r, std::abs(M(a * d + b, c * d + e)
                                     - M(idx.bar(e) * d + idx.bar(c), idx.bar(b) * d + idx.bar(a))));
    }
    return make_entry("tcp", r, grid.nodes().size(), tol);
  }

  double interior_boundedness_residual( const MatrixScatteringFunction::Evaluator& f,
                                        const AnalyticityConfig& cfg, std::size_t* samples )
  {
    const int n = std::max(cfg.line_samples, 2);
    auto line_max = [&]( double im ) {
      double m = 0.0;
      for ( int k = 0; k < n; ++k ) {
        const double re = -cfg.qc + 2.0 * cfg.qc * k / (n - 1);
        update_max(m, max_abs_entry(f(cplx(re, im))));
      }
      return m;
    };
    double boundary = 0.0, interior = 0.0;
    update_max(boundary, line_max(0.0));
    update_max(boundary, line_max(pi));
    for ( double im : { 0.25 * pi, 0.5 * pi, 0.75 * pi } )
      update_max(interior, line_max(im));
    if ( samples )
      *samples = static_cast<std::size_t>(5 * n);
    if ( !std::isfinite(interior) || !std::isfinite(boundary) )
      return inf;
    if ( boundary == 0.0 )
      return interior == 0.0 ? 0.0 : inf;
    return std::max(0.0, interior / boundary - 1.0);
  }

  double cauchy_residual( const MatrixScatteringFunction::Evaluator& f, const AnalyticityConfig& cfg,
                          std::size_t* samples )
  {
    const auto [x, w] = gauss_legendre_rule(cfg.points_per_edge);
    const cplx corners[4] = { { -cfg.qc, cfg.im_lo }, { cfg.qc, cfg.im_lo },
                              { cfg.qc, cfg.im_hi }, { -cfg.qc, cfg.im_hi } };
    CMatrix integral;
    double scale = 0.0, perimeter = 0.0;
    for ( int e = 0; e < 4; ++e ) {
      const cplx z0 = corners[e], z1 = corners[(e + 1) % 4];
      const cplx half = 0.5 * (z1 - z0);
      perimeter += std::abs(z1 - z0);
      for ( std::size_t k = 0; k < x.size(); ++k ) {
        const CMatrix v = f(z0 + half * (x[k] + 1.0));
        update_max(scale, max_abs_entry(v));
        if ( integral.size() == 0 )
          integral = CMatrix::Zero(v.rows(), v.cols());
        integral += (w[k] * half) * v;
      }
    }
    if ( samples )
      *samples = 4 * x.size();
    const double num = max_abs_entry(integral);
    if ( !std::isfinite(num) || !std::isfinite(scale) )
      return inf;
    if ( scale == 0.0 )
      return 0.0;
    return num / (perimeter * scale);
  }

  std::vector<ReportEntry> check_crossing( const MatrixScatteringFunction& S, const RapidityGrid& grid,
                                           const Tolerances& tol, CrossingMode mode,
                                           const AnalyticityConfig& cfg )
  {
    if ( !S.has_strip_domain() )
      RSF_THROW(InsufficientDomain, "check_crossing: '" << S.label()
                << "' is only known on the real line; crossing needs the strip");
    const std::string prefix = ( mode == CrossingMode::LL ) ? "crossing" : "lr_crossing";
    double r = 0.0;
    if ( mode == CrossingMode::LL ) {
      const auto& idx = require_ll(S, "check_crossing");
      const int d = idx.dim();
      for ( double q : grid.nodes() ) {
        const CMatrix lhs = S.eval(cplx(-q, pi));
        const CMatrix M = S.eval(q);
        for ( int a = 0; a < d; ++a )
          for ( int b = 0; b < d; ++b )
            for ( int c = 0; c < d; ++c )
              for ( int e = 0; e < d; ++e )
                update_max(r, std::abs(lhs(a * d + b, c * d + e)
                                       - M(idx.bar(c) * d + a, e * d + idx.bar(b))));
      }
    } else {
      if ( S.kind() != DeclaredKind::LR )
        RSF_THROW(Structural, "check_crossing (LR mode): '" << S.label() << "' is not a left-right function");
      const auto& P = S.left_space();
      const auto& Mi = S.right_space();
      const int dp = P.dim(), dm = Mi.dim();
      for ( double q : grid.nodes() ) {
        const CMatrix lhs = S.eval(cplx(q, pi));
        const CMatrix M = S.eval(q);
        for ( int a = 0; a < dp; ++a )
          for ( int b = 0; b < dm; ++b )
            for ( int c = 0; c < dp; ++c )
              for ( int e = 0; e < dm; ++e ) {
                const cplx l = lhs(a * dm + b, c * dm + e);
                update_max(r, std::abs(l - std::conj(M(P.bar(a) * dm + e, P.bar(c) * dm + b))));
                update_max(r, std::abs(l - std::conj(M(c * dm + Mi.bar(b), a * dm + Mi.bar(e)))));
              }
      }
    }
    auto f = [&S]( cplx z ) { return S.eval(z); };
    std::size_t n_int = 0, n_cauchy = 0;
    const double interior = interior_boundedness_residual(f, cfg, &n_int);
    const double cauchy = cauchy_residual(f, cfg, &n_cauchy);
    return { make_entry(prefix + ".boundary", r, grid.nodes().size(), tol.algebraic),
             make_entry(prefix + ".interior", interior, n_int, tol.quadrature),
             make_entry(prefix + ".cauchy", cauchy, n_cauchy, tol.quadrature) };
  }

  ReportEntry check_mixed_ybe( const MatrixScatteringFunction& Rp, const MatrixScatteringFunction& S,
                               const MatrixScatteringFunction& Rm, const RapidityGrid& grid, double tol )
  {
    require_ll(Rp, "check_mixed_ybe");
    require_ll(Rm, "check_mixed_ybe");
    if ( S.kind() != DeclaredKind::LR )
      RSF_THROW(Structural, "check_mixed_ybe: '" << S.label() << "' is not a left-right function");
    const int dp = Rp.d_left(), dm = Rm.d_left();
    if ( S.d_left() != dp || S.d_right() != dm )
      RSF_THROW(Structural, "check_mixed_ybe: index spaces of S do not match R+ and R-");
    const std::array<int,3> left{dp, dp, dm}, right{dp, dm, dm};
    double r_left = 0.0, r_right = 0.0;
    std::size_t samples = 0;
    for ( double q : grid.nodes() ) {
      const CMatrix sq = S.eval(q);
      for ( double q2 : grid.nodes() ) {
        const CMatrix sq2 = S.eval(q2);
        // R+(q-q')_12 S(q)_13 S(q')_23 = S(q')_23 S(q)_13 R+(q-q')_12
        const CMatrix rp = embed3(Rp.eval_r(q - q2), 0, left);
        const CMatrix s13 = embed3_outer(sq, left), s23 = embed3(sq2, 1, left);
        update_max(r_left, spectral_norm(rp * s13 * s23 - s23 * s13 * rp));
        // S(q)_12 S(q')_13 R-(q-q')_23 = R-(q-q')_23 S(q')_13 S(q)_12
        const CMatrix rm = embed3(Rm.eval_r(q - q2), 1, right);
        const CMatrix t12 = embed3(sq, 0, right), t13 = embed3_outer(sq2, right);
        update_max(r_right, spectral_norm(t12 * t13 * rm - rm * t13 * t12));
        ++samples;
      }
    }
    std::ostringstream note;
    note.precision(3);
    note << "left " << r_left << ", right " << r_right;
    return make_entry("mixed_ybe", std::max(r_left, r_right), samples, tol, note.str());
  }

  ReportEntry check_flip_symmetry( const MatrixScatteringFunction& R, const RapidityGrid& grid, double tol )
  {
    const int d = require_ll(R, "check_flip_symmetry").dim();
    const CMatrix F = flip_matrix(d);
    double r = 0.0;
    for ( double q : grid.nodes() ) {
      const CMatrix M = R.eval_r(q);
      update_max(r, spectral_norm(F * M * F - M));
    }
    return make_entry("flip_symmetry", r, grid.nodes().size(), tol);
  }

  ReportEntry check_repeated_flip( const MatrixScatteringFunction& R, const RapidityGrid& grid, double tol )
  {
    require_ll(R, "check_repeated_flip");
    if ( !R.has_strip_domain() )
      RSF_THROW(InsufficientDomain, "check_repeated_flip: '" << R.label() << "' is only known on the real line");
    double r = 0.0;
    for ( double q : grid.nodes() )
      update_max(r, spectral_norm(R.eval_r(q) - R.eval_r(cplx(-q, pi))));
    return make_entry("repeated_flip", r, grid.nodes().size(), tol);
  }

  MassAssignment::MassAssignment( const InternalIndexSpace& idx, std::vector<double> masses )
    : m_masses(std::move(masses))
  {
    if ( static_cast<int>(m_masses.size()) != idx.dim() )
      RSF_THROW(Structural, "MassAssignment: expected " << idx.dim() << " masses, got " << m_masses.size());
    for ( int a = 0; a < idx.dim(); ++a ) {
      const double m = m_masses[static_cast<std::size_t>(a)];
      if ( !(m > 0.0) || !std::isfinite(m) )
        RSF_THROW(Parameter, "MassAssignment: mass of index " << a + 1 << " must be positive, got " << m);
      if ( m != m_masses[static_cast<std::size_t>(idx.bar(a))] )
        RSF_THROW(Parameter, "MassAssignment: mass of index " << a + 1 << " differs from its conjugate index "
                  << idx.bar(a) + 1);
    }
  }

  ReportEntry check_mass_compatibility( const MatrixScatteringFunction& R, const MassAssignment& m,
                                        const RapidityGrid& grid, double tol )
  {
    const int d = require_ll(R, "check_mass_compatibility").dim();
    if ( m.dim() != d )
      RSF_THROW(Structural, "check_mass_compatibility: mass assignment has " << m.dim() << " entries, expected " << d);
    double r = 0.0;
    for ( double q : grid.nodes() ) {
      const CMatrix M = R.eval_r(q);
      for ( int a = 0; a < d; ++a )
        for ( int b = 0; b < d; ++b )
          for ( int c = 0; c < d; ++c )
            for ( int e = 0; e < d; ++e )
              if ( m[a] != m[c] || m[b] != m[e] )
                update_max(r, std::abs(M(a * d + b, c * d + e)));
    }
    return make_entry("mass_compatibility", r, grid.nodes().size(), tol);
  }

  ReportEntry check_internal_symmetry( const MatrixScatteringFunction& R, const CMatrix& V,
                                       const RapidityGrid& grid, double tol )
  {
    const int d = require_ll(R, "check_internal_symmetry").dim();
    check_shape(V, d, "internal symmetry V");
    if ( spectral_norm(V * V.adjoint() - CMatrix::Identity(d, d)) > 1e-12 )
      RSF_THROW(Parameter, "check_internal_symmetry: V is not unitary");
    CMatrix VV(d * d, d * d);
    for ( int a = 0; a < d; ++a )
      for ( int c = 0; c < d; ++c )
        VV.block(a * d, c * d, d, d) = V(a, c) * V;
    double r = 0.0;
    for ( double q : grid.nodes() ) {
      const CMatrix M = R.eval_r(q);
      update_max(r, spectral_norm(VV * M - M * VV));
    }
    return make_entry("internal_symmetry", r, grid.nodes().size(), tol);
  }

  std::vector<ReportEntry> ll_suite( const MatrixScatteringFunction& R, const RapidityGrid& grid,
                                     const Tolerances& tol, const AnalyticityConfig& cfg )
  {
    std::vector<ReportEntry> out;
    out.push_back(check_unitarity(R, grid, tol.algebraic));
    out.push_back(check_hermitian_analyticity(R, grid, tol.algebraic));
    out.push_back(check_ybe(R, grid, tol.algebraic));
    out.push_back(check_tcp(R, grid, tol.algebraic));
    for ( auto& e : check_crossing(R, grid, tol, CrossingMode::LL, cfg) )
      out.push_back(std::move(e));
    return out;
  }

  std::vector<ReportEntry> lr_suite( const MatrixScatteringFunction& Rp, const MatrixScatteringFunction& S,
                                     const MatrixScatteringFunction& Rm, const RapidityGrid& grid,
                                     const Tolerances& tol, const AnalyticityConfig& cfg )
  {
    std::vector<ReportEntry> out;
    out.push_back(check_unitarity(S, grid, tol.algebraic));
    out.push_back(check_mixed_ybe(Rp, S, Rm, grid, tol.algebraic));
    for ( auto& e : check_crossing(S, grid, tol, CrossingMode::LR, cfg) )
      out.push_back(std::move(e));
    return out;
  }

}
