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

// Acceptance run: one PASS/FAIL line per acceptance criterion, with the
// measured quantities. Exit status 0 iff every criterion passes.

#include "rsf/cli.hpp"
#include "rsf/fock.hpp"
#include "rsf/locality.hpp"
#include "rsf/scattering.hpp"
#include "rsf/standard_pair.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace rsf;

namespace {

  using Clock = std::chrono::steady_clock;

  double seconds_since( Clock::time_point t0 )
  {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }

  struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    // Records a measured quantity; `ok` is the comparison against its bound.
    void check( bool ok, const std::string& what )
    {
      if ( !ok )
        pass = false;
      if ( detail.tellp() > 0 )
        detail << "; ";
      detail << what << (ok ? "" : " [violated]");
    }
  };

  std::string sci( double v )
  {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }

  const std::string models_dir = RSF_MODELS_DIR;
  const std::vector<std::string> shipped{"free", "sinh", "sinh_flip", "massive", "broken_crossing", "on_template"};

  // The distinct chiral functions of the shipped model documents.
  std::vector<std::pair<std::string, MatrixScatteringFunction>> shipped_functions()
  {
    std::vector<std::pair<std::string, MatrixScatteringFunction>> out;
    for ( const auto& name : shipped ) {
      const cli::ModelDocument doc = cli::parse_model(models_dir + "/" + name + ".model");
      for ( const auto& s : doc.sides )
        out.emplace_back(name + "/" + s.name, cli::build_side(s));
    }
    return out;
  }

  ScalarFunction sh( double b ) { return sinh_scalar({b}, 1); }

  MatrixScatteringFunction rotated_model( double angle = 0.4 )
  {
    const auto diag = build_diagonal_family(InternalIndexSpace(2), {{sh(0.5), sh(1.2)}, {sh(1.2), sh(2.3)}}, "diag");
    CMatrix V(2, 2);
    V << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return build_rotated(diag, V);
  }

  // The LL models of criterion 1: constant identity (d = 1, 2) and the
  // scalar sinh family with every non-empty subset of {pi/6, pi/4, pi/2}.
  std::vector<MatrixScatteringFunction> criterion1_models()
  {
    std::vector<MatrixScatteringFunction> out{build_constant_identity(InternalIndexSpace(1)),
                                              build_constant_identity(InternalIndexSpace(2))};
    const std::vector<double> bs{pi / 6, pi / 4, pi / 2};
    for ( unsigned mask = 1; mask < 8; ++mask ) {
      std::vector<double> blocks;
      for ( unsigned k = 0; k < 3; ++k )
        if ( mask & (1u << k) )
          blocks.push_back(bs[k]);
      out.push_back(build_scalar_family(blocks, 1));
    }
    return out;
  }

  Outcome criterion1()
  {
    Outcome o;
    const RapidityGrid grid = RapidityGrid::gauss_legendre(32);
    double worst_alg = 0.0, worst_quad = 0.0, slowest = 0.0;
    int failed = 0, count = 0;
    for ( const auto& R : criterion1_models() ) {
      const auto t0 = Clock::now();
      for ( const auto& e : ll_suite(R, grid, Tolerances{}) ) {
        if ( !e.pass )
          ++failed;
        (e.tolerance > 1e-9 ? worst_quad : worst_alg) = std::max(e.tolerance > 1e-9 ? worst_quad : worst_alg,
                                                                 e.residual);
      }
      slowest = std::max(slowest, seconds_since(t0));
      ++count;
    }
    o.check(failed == 0, std::to_string(count) + " models, " + std::to_string(failed) + " failing entries");
    o.check(worst_alg <= 1e-10, "worst algebraic residual " + sci(worst_alg) + " (tol 1e-10)");
    o.check(worst_quad <= 1e-8, "worst contour residual " + sci(worst_quad) + " (tol 1e-8)");
    o.check(slowest < 10.0, "slowest model " + sci(slowest) + " s (limit 10 s)");
    return o;
  }

  Outcome criterion2()
  {
    Outcome o;
    const BraidingData B = braiding(build_scalar_family({pi / 4}, 1), RapidityGrid::gauss_legendre(3));
    const std::vector<LegGroup> g3{{B.leg(), 3}}, g4{{B.leg(), 4}};
    const auto perms = all_permutations(3);
    double worst = 0.0;
    int products = 0;
    for ( const auto& s : perms )
      for ( const auto& t : perms ) {
        Permutation st(3);
        for ( int p = 0; p < 3; ++p )
          st[static_cast<std::size_t>(p)] = s[static_cast<std::size_t>(t[static_cast<std::size_t>(p)])];
        const TensorMap Ds = perm_rep(B, 3, word_for(s)), Dt = perm_rep(B, 3, word_for(t)),
                        Dst = perm_rep(B, 3, word_for(st));
        worst = std::max(worst, orbit_operator_norm(g3, [&]( const LeggedTensor& X ) { return Ds(Dt(X)) - Dst(X); }));
        ++products;
      }
    o.check(products == 36, std::to_string(products) + " products");
    o.check(worst < 1e-11, "D3 worst residual " + sci(worst) + " (tol 1e-11)");
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> letter(0, 2), len(1, 10);
    double worst4 = 0.0;
    for ( int trial = 0; trial < 10; ++trial ) {
      Word w;
      for ( int k = len(rng); k > 0; --k )
        w.push_back(letter(rng));
      const TensorMap a = perm_rep(B, 4, w), b = perm_rep(B, 4, word_for(permutation_of(w, 4)));
      worst4 = std::max(worst4, orbit_operator_norm(g4, [&]( const LeggedTensor& X ) { return a(X) - b(X); }));
    }
    o.check(worst4 < 1e-10, "D4 10 word pairs worst " + sci(worst4) + " (tol 1e-10)");
    return o;
  }

  Outcome criterion3()
  {
    Outcome o;
    double idem = 0.0, adj = 0.0, flip = 0.0;
    int models = 0;
    for ( const auto& [name, R] : shipped_functions() ) {
      // Pointwise identities: exact orbit norms on a 6-node grid.
      const BraidingData B = braiding(R, RapidityGrid::gauss_legendre(6));
      for ( int n = 1; n <= 3; ++n ) {
        idem = std::max(idem, projector_idempotency_residual(B, n));
        adj = std::max(adj, projector_selfadjoint_residual(B, n));
        flip = std::max(flip, flip_product_identity_check(B, n));
      }
      ++models;
    }
    o.check(true, std::to_string(models) + " chiral functions of the shipped models, n <= 3");
    o.check(idem < 1e-11, "idempotency " + sci(idem));
    o.check(adj < 1e-11, "self-adjointness " + sci(adj));
    o.check(flip < 1e-11, "flip-product identity " + sci(flip));
    return o;
  }

  Outcome criterion4()
  {
    Outcome o;
    double worst = 0.0, vacuum = 0.0;
    int models = 0;
    std::size_t samples = 0;
    for ( const auto& [name, R] : shipped_functions() ) {
      const BraidingData B = braiding(R, RapidityGrid::gauss_legendre(32));
      std::mt19937_64 rng(11);
      std::normal_distribution<double> nd;
      LeggedTensor f({B.leg()});
      for ( auto& v : f.values() )
        v = cplx(nd(rng), nd(rng));
      const ReportEntry e = check_particle_bounds(B, f, 100, 3, 7, 1e-12);
      worst = std::max(worst, e.residual);
      samples += e.samples;
      const FockVector vac = FockVector::vacuum(B.leg(), 3);
      const double lhs = create(B, f, vac).norm(), rhs = f.norm() * vac.number_weighted_norm(1.0);
      vacuum = std::max(vacuum, std::abs(lhs - rhs) / rhs);
      ++models;
    }
    o.check(samples == 100u * static_cast<std::size_t>(models),
            std::to_string(models) + " models x 100 random symmetric vectors, N_max = 3");
    o.check(worst <= 1e-12, "largest relative violation " + sci(worst) + " (slack 1e-12)");
    o.check(vacuum <= 1e-14, "vacuum equality defect " + sci(vacuum));
    return o;
  }

  Outcome criterion5()
  {
    Outcome o;
    const auto t0 = Clock::now();
    const auto [f, g] = default_locality_pair(InternalIndexSpace(1), AssemblyConfig{});
    const LocalizedVector control = localized_transform(InternalIndexSpace(1), {TestFunction::bump(-0.6, 0.5)});
    const std::vector<std::pair<std::string, MatrixScatteringFunction>> models{
      {"free", build_constant_identity(InternalIndexSpace(1))}, {"sinh", build_scalar_family({pi / 4}, 1)}};
    for ( const auto& [name, R] : models ) {
      const auto runs = field_locality_series(R, f, g, {32, 64});
      const double r32 = runs[0].residual, r64 = runs[1].residual;
      o.check(r64 < 1e-5, name + ": residual(G=64) " + sci(r64) + " (tol 1e-5)");
      o.check(r32 / r64 >= 3.0, name + ": decrease 32->64 " + sci(r32 / r64) + "x (need >= 3x)");
      const auto ctrl = field_locality_series(R, control, g, {32, 64}, 6.0, true);
      const double cmin = std::min(ctrl[0].residual, ctrl[1].residual);
      o.check(cmin > 1e-2, name + ": left-supported control " + sci(cmin) + " (need > 1e-2)");
    }
    const double t = seconds_since(t0);
    o.check(t < 120.0, "runtime " + sci(t) + " s (limit 120 s)");
    return o;
  }

  MatrixScatteringFunction flip_of( const MatrixScatteringFunction& R )
  {
    return build_flip_lr(R, RapidityGrid::gauss_legendre(32));
  }

  Outcome criterion6()
  {
    Outcome o;
    const RapidityGrid grid = RapidityGrid::gauss_legendre(6);
    const std::vector<std::pair<int,int>> levels{{2, 1}, {1, 2}, {2, 2}};
    auto worst_over_levels = [&]( const MatrixScatteringFunction& R, const MatrixScatteringFunction& S ) {
      double w = 0.0;
      for ( const auto& [m, n] : levels ) {
        const auto pc = twist_projector_commutation(R, S, R, m, n, grid);
        w = std::max({w, pc.left, pc.right});
      }
      return w;
    };
    const MatrixScatteringFunction sinh = build_scalar_family({pi / 4}, 1), rot = rotated_model();
    const double vs = worst_over_levels(sinh, flip_of(sinh));
    const double vr = worst_over_levels(rot, flip_of(rot));
    o.check(vs < 1e-11, "sinh flip bundle " + sci(vs) + " (tol 1e-11)");
    o.check(vr < 1e-11, "rotated d=2 flip bundle " + sci(vr) + " (tol 1e-11)");
    const double broken = worst_over_levels(rot, perturb_entry(flip_of(rot), 0, 0, 1.1));
    o.check(broken > 1e-3, "10%-perturbed S " + sci(broken) + " (need > 1e-3)");
    return o;
  }

  Outcome criterion7()
  {
    Outcome o;
    const MatrixScatteringFunction R = build_scalar_family({pi / 4}, 1);
    const RapidityGrid grid = RapidityGrid::gauss_legendre(64);
    const auto bundle = TripleBundle::massless(ChiralSide{R, grid}, ChiralSide{R, grid}, flip_of(R));
    AssemblyConfig cfg;
    cfg.structure = false;
    const ValidationReport rep = assemble_massless(bundle, cfg);
    for ( const char* side : {"left", "right"} ) {
      const std::string axiom = std::string("twisted_commutator.") + side;
      double r32 = NAN, r64 = NAN, route = NAN;
      for ( const auto& p : rep.series )
        if ( p.axiom == axiom )
          (p.G == 32 ? r32 : r64) = p.residual;
      for ( const auto& e : rep.entries )
        if ( e.axiom == axiom + ".route" )
          route = e.residual;
      o.check(r64 < 1e-5, std::string(side) + ": residual(G=64) " + sci(r64) + " (tol 1e-5)");
      o.check(r32 / r64 >= 3.0, std::string(side) + ": decrease 32->64 " + sci(r32 / r64) + "x (need >= 3x)");
      o.check(route < 1e-11, std::string(side) + ": route agreement " + sci(route) + " (tol 1e-11)");
    }
    return o;
  }

  Outcome criterion8()
  {
    Outcome o;
    const RapidityGrid grid = RapidityGrid::gauss_legendre(32);
    std::vector<MatrixScatteringFunction> models = criterion1_models();
    models.push_back(rotated_model());
    int passing = 0, lifted = 0;
    double worst = 0.0;
    for ( const auto& R : models ) {
      bool ok = true;
      for ( const auto& e : ll_suite(R, grid, Tolerances{}) )
        ok = ok && e.pass;
      ok = ok && check_flip_symmetry(R, grid, 1e-10).pass;
      if ( !ok )
        continue;
      ++passing;
      bool lr_ok = true;
      for ( const auto& e : lr_suite(R, build_flip_lr(R, grid), R, grid, Tolerances{}) ) {
        lr_ok = lr_ok && e.pass;
        worst = std::max(worst, e.residual);
      }
      lifted += lr_ok ? 1 : 0;
    }
    o.check(lifted == passing, std::to_string(lifted) + " of " + std::to_string(passing)
                                 + " passing LL models give a passing LR suite");
    o.check(true, "worst LR residual " + sci(worst));
    return o;
  }

  CMatrix random_unitary( int n, std::mt19937_64& rng )
  {
    std::normal_distribution<double> nd;
    CMatrix A(n, n);
    for ( int i = 0; i < n; ++i )
      for ( int j = 0; j < n; ++j )
        A(i, j) = cplx(nd(rng), nd(rng));
    return Eigen::HouseholderQR<CMatrix>(A).householderQ();
  }

  Outcome criterion9()
  {
    Outcome o;
    std::ifstream in(RSF_TEST_DATA_DIR "/block_diagonal_mask_d2.txt");
    std::vector<std::string> expected;
    for ( std::string line; std::getline(in, line); )
      if ( !line.empty() )
        expected.push_back(line);
    std::mt19937_64 rng(31);
    const CMatrix A = random_unitary(4, rng), Bm = random_unitary(4, rng), C = random_unitary(4, rng);
    const auto Rp = build_constant(A, InternalIndexSpace(2), Convention::R, "A");
    const auto Rm = build_constant(C, InternalIndexSpace(2), Convention::R, "C");
    const auto S = MatrixScatteringFunction::left_right(InternalIndexSpace(2), InternalIndexSpace(2),
                                                        [Bm]( cplx ) { return Bm; }, "B");
    const CMatrix M = assemble_block_diagonal(Rp, S, Rm, 0.4);
    int mismatched = 0;
    for ( int r = 0; r < 16; ++r ) {
      std::string row;
      for ( int c = 0; c < 16; ++c )
        row += M(r, c) != 0.0 ? 'x' : '.';
      if ( static_cast<std::size_t>(r) >= expected.size() || row != expected[static_cast<std::size_t>(r)] )
        ++mismatched;
    }
    o.check(expected.size() == 16 && mismatched == 0,
            "mask rows differing from the golden file: " + std::to_string(mismatched));
    // Unitarity over the grid for unitary (q-dependent) inputs.
    const auto sinh = build_sinh_identity(InternalIndexSpace(2), {pi / 4}, 1);
    const auto rot = rotated_model();
    const auto Sflip = build_flip_lr(rot, RapidityGrid::gauss_legendre(32));
    double worst = 0.0;
    const RapidityGrid grid = RapidityGrid::gauss_legendre(32);
    for ( double q : grid.nodes() ) {
      const CMatrix U = assemble_block_diagonal(sinh, Sflip, rot, q);
      worst = std::max(worst, spectral_norm(U.adjoint() * U - CMatrix::Identity(U.rows(), U.cols())));
    }
    o.check(worst < 1e-12, "unitarity over the grid " + sci(worst) + " (tol 1e-12)");
    return o;
  }

  Outcome criterion10()
  {
    Outcome o;
    const auto f = []( double p ) { return cplx(std::exp(-p)); };
    for ( double m : {1.0, 3.0} ) {
      const IsometryResult r = verify_isometry(f, m);
      const double dev = std::max(std::abs(r.momentum_norm2 - 0.25), std::abs(r.rapidity_norm2 - 0.25));
      o.check(dev < 1e-10, "m=" + sci(m) + ": isometry vs 1/4 " + sci(dev) + " (tol 1e-10)");
    }
    const std::vector<double> thetas{-2.0, -0.5, 0.0, 0.8, 2.5};
    const auto g = []( double p ) { return cplx(p * std::exp(-p), 0.3 * std::exp(-2 * p)); };
    for ( double m : {1.0, 3.0} ) {
      const double r = intertwining_residual(g, m, 0.7, thetas);
      o.check(r < 1e-12, "m=" + sci(m) + ": intertwining at 5 points " + sci(r) + " (tol 1e-12)");
    }
    return o;
  }

  std::string slurp( const std::string& path )
  {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  Outcome criterion11()
  {
    Outcome o;
    const std::string dir = std::filesystem::temp_directory_path().string();
    const std::string a = dir + "/rsf_acceptance_a.json", b = dir + "/rsf_acceptance_b.json";
    int status[2];
    for ( int k = 0; k < 2; ++k ) {
      const std::string cmd = std::string(RSF_EXE) + " validate " + models_dir + "/sinh_flip.model --seed 7 --report "
                              + (k == 0 ? a : b) + " > /dev/null 2>&1";
      const int s = std::system(cmd.c_str());
      status[k] = WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    }
    const std::string ra = slurp(a), rb = slurp(b);
    o.check(status[0] == status[1], "exit statuses " + std::to_string(status[0]) + ", " + std::to_string(status[1]));
    o.check(!ra.empty() && ra == rb, "structured reports (" + std::to_string(ra.size()) + " bytes) "
                                       + (ra == rb ? "byte-identical" : "differ"));
    std::remove(a.c_str());
    std::remove(b.c_str());
    return o;
  }

}

int main()
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
    {"LL axiom suite on the built-in families", criterion1},
    {"symmetric-group representation (D3 exhaustive, D4 words)", criterion2},
    {"projector identities for n <= 3 on the shipped models", criterion3},
    {"particle-bound inequalities", criterion4},
    {"field locality with grid refinement", criterion5},
    {"twist/projector dichotomy", criterion6},
    {"twisted locality at (m,n) = (1,1)", criterion7},
    {"flip construction lifts every passing LL model", criterion8},
    {"block-diagonal assembly: mask and unitarity", criterion9},
    {"massive intertwiner isometry and intertwining", criterion10},
    {"determinism of the structured report", criterion11},
  };
  int failures = 0;
  for ( std::size_t i = 0; i < criteria.size(); ++i ) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch ( const std::exception& e ) {
      o.check(false, std::string("exception: ") + e.what());
    }
    failures += o.pass ? 0 : 1;
    std::cout << "criterion " << (i + 1) << " " << (o.pass ? "PASS" : "FAIL") << " [" << criteria[i].first << "] "
              << o.detail.str() << " (" << sci(seconds_since(t0)) << " s)" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
            << " criteria pass" << std::endl;
  return failures == 0 ? 0 : 1;
}
