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

#include "rsf/cli.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

using namespace rsf;
using namespace rsf::cli;

namespace {

  const std::string models = RSF_MODELS_DIR;

  std::string model_path( const std::string& name )
  {
    return models + "/" + name + ".model";
  }

  std::string slurp( const std::string& path )
  {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  template <class F>
  ErrorCode code_of( F&& f )
  {
    try {
      f();
    } catch ( const Error& e ) {
      return e.code();
    }
    return ErrorCode::Io;   // sentinel: nothing was thrown
  }

  template <class F>
  std::string message_of( F&& f )
  {
    try {
      f();
    } catch ( const Error& e ) {
      return e.what();
    }
    return {};
  }

  const char* minimal_free = R"({
    "schema_version": 1, "label": "minimal",
    "sides": [ { "name": "s", "dim": 1, "builder": { "name": "constant_identity" } } ],
    "suites": ["ll"] })";

  std::string with_sides( const std::string& sides, const std::string& extra = "" )
  {
    return R"({ "schema_version": 1, "label": "t", "sides": )" + sides + extra + "}";
  }

  // Runs the rsf executable and returns its exit status.
  int run_tool( const std::string& args )
  {
    const std::string cmd = std::string(RSF_EXE) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string temp_path( const std::string& name )
  {
    return (testing::TempDir() + "/") + name;
  }

  const ReportEntry* find_entry( const ValidationReport& r, const std::string& axiom )
  {
    for ( const auto& e : r.entries )
      if ( e.axiom == axiom )
        return &e;
    return nullptr;
  }

}

////////////////////////////////////////////////////////////////////////////////
// Model documents

TEST(ParseModel, MinimalFreeDocument)
{
  const ModelDocument doc = parse_model_text(minimal_free);
  EXPECT_EQ(doc.label, "minimal");
  ASSERT_EQ(doc.sides.size(), 1u);
  EXPECT_EQ(doc.sides[0].builder.name, "constant_identity");
  EXPECT_EQ(doc.sides[0].grid.G, 32);
  EXPECT_EQ(doc.sides[0].grid.qmax, 6.0);
  EXPECT_EQ(doc.suites, std::vector<std::string>{"ll"});
  EXPECT_EQ(doc.tol.algebraic, 1e-10);
  EXPECT_EQ(doc.tol.quadrature, 1e-8);
  EXPECT_FALSE(doc.lr.has_value());
}

TEST(ParseModel, BarIsOneBased)
{
  const auto doc = parse_model_text(with_sides(
    R"([ { "name": "s", "dim": 3, "bar": [2, 1, 3], "builder": { "name": "constant_identity" } } ])"));
  EXPECT_EQ(doc.sides[0].bar, (std::vector<int>{1, 0, 2}));
  EXPECT_EQ(build_side(doc.sides[0]).index_space().bar_map(), (std::vector<int>{1, 0, 2}));
  // Not an involution, out of range.
  EXPECT_EQ(code_of([] { (void)parse_model_text(with_sides(
    R"([ { "name": "s", "dim": 3, "bar": [2, 3, 1], "builder": { "name": "constant_identity" } } ])")); }),
    ErrorCode::Config);
  EXPECT_EQ(code_of([] { (void)parse_model_text(with_sides(
    R"([ { "name": "s", "dim": 2, "bar": [0, 1], "builder": { "name": "constant_identity" } } ])")); }),
    ErrorCode::Config);
}

TEST(ParseModel, SinhParameterRangeNamesTheField)
{
  const std::string doc = with_sides(
    R"([ { "name": "s", "dim": 1, "builder": { "name": "sinh", "params": { "b": [0.5, 4.0], "sign": 1 } } } ])");
  EXPECT_EQ(code_of([&] { (void)parse_model_text(doc); }), ErrorCode::Parameter);
  const std::string msg = message_of([&] { (void)parse_model_text(doc); });
  EXPECT_NE(msg.find("$.sides[0].builder.params.b[1]"), std::string::npos) << msg;
  EXPECT_NE(msg.find("(0, pi)"), std::string::npos) << msg;
  EXPECT_EQ(msg.find("b[0]"), std::string::npos) << msg;
}

TEST(ParseModel, DuplicateSideNamesAreASchemaError)
{
  const std::string side = R"({ "name": "x", "dim": 1, "builder": { "name": "constant_identity" } })";
  const std::string doc = with_sides("[" + side + ", " + side + "]");
  EXPECT_EQ(code_of([&] { (void)parse_model_text(doc); }), ErrorCode::Config);
  EXPECT_NE(message_of([&] { (void)parse_model_text(doc); }).find("duplicate side name"), std::string::npos);
}

TEST(ParseModel, StrictSchemaRejectsUnknownKeysEverywhere)
{
  for ( const std::string doc : {
          with_sides(R"([ { "name": "s", "dim": 1, "builder": { "name": "constant_identity" } } ])", R"(, "bogus": 1)"),
          with_sides(R"([ { "name": "s", "dim": 1, "colour": "red", "builder": { "name": "constant_identity" } } ])"),
          with_sides(R"([ { "name": "s", "dim": 1, "builder": { "name": "constant_identity", "parms": {} } } ])"),
          with_sides(R"([ { "name": "s", "dim": 1, "builder": { "name": "sinh", "params": { "b": [1.0], "sign": 1, "c": 2 } } } ])"),
          with_sides(R"([ { "name": "s", "dim": 1, "grid": { "G": 32, "nodes": 4 }, "builder": { "name": "constant_identity" } } ])"),
          with_sides(R"([ { "name": "s", "dim": 1, "builder": { "name": "constant_identity" } } ])",
                     R"(, "tolerances": { "algebraic": 1e-9, "loose": 1 })") } ) {
    const std::string msg = message_of([&] { (void)parse_model_text(doc); });
    EXPECT_EQ(code_of([&] { (void)parse_model_text(doc); }), ErrorCode::Config) << doc;
    EXPECT_NE(msg.find("unknown key"), std::string::npos) << msg;
  }
}

TEST(ParseModel, BuilderAndTypeErrors)
{
  // Unknown builder, wrong arity (missing parameter), wrong type, dimension mismatch.
  for ( const std::string side : {
          R"({ "name": "s", "dim": 1, "builder": { "name": "ising" } })",
          R"({ "name": "s", "dim": 1, "builder": { "name": "sinh", "params": { "b": [1.0] } } })",
          R"({ "name": "s", "dim": 1, "builder": { "name": "sinh", "params": { "b": "one", "sign": 1 } } })",
          R"({ "name": "s", "dim": 2, "builder": { "name": "sinh", "params": { "b": [1.0], "sign": 1 } } })",
          R"({ "name": "s", "dim": "1", "builder": { "name": "constant_identity" } })" } )
    EXPECT_EQ(code_of([&] { (void)parse_model_text(with_sides("[" + side + "]")); }), ErrorCode::Config) << side;
  // Sign other than +-1 is a range error.
  EXPECT_EQ(code_of([] { (void)parse_model_text(with_sides(
    R"([ { "name": "s", "dim": 1, "builder": { "name": "sinh", "params": { "b": [1.0], "sign": 2 } } } ])")); }),
    ErrorCode::Parameter);
  // An LR builder referencing a missing side.
  EXPECT_EQ(code_of([] { (void)parse_model_text(with_sides(
    R"([ { "name": "s", "dim": 1, "builder": { "name": "constant_identity" } } ])",
    R"(, "lr": { "name": "flip", "params": { "from": "nowhere" } })")); }), ErrorCode::Config);
  // Unsupported schema version; unknown suite.
  EXPECT_EQ(code_of([] { (void)parse_model_text(R"({ "schema_version": 2, "label": "t", "sides": [
    { "name": "s", "dim": 1, "builder": { "name": "constant_identity" } } ] })"); }), ErrorCode::Config);
  EXPECT_EQ(code_of([] { (void)parse_model_text(with_sides(
    R"([ { "name": "s", "dim": 1, "builder": { "name": "constant_identity" } } ])", R"(, "suites": ["lll"])")); }),
    ErrorCode::Config);
}

TEST(ParseModel, AllErrorsAreListed)
{
  const std::string doc = with_sides(
    R"([ { "name": "a", "dim": 1, "builder": { "name": "sinh", "params": { "b": [5.0], "sign": 1 } } },
         { "name": "a", "dim": 1, "builder": { "name": "nope" } } ])", R"(, "extra": true)");
  const std::string msg = message_of([&] { (void)parse_model_text(doc); });
  EXPECT_NE(msg.find("4 schema error(s)"), std::string::npos) << msg;
  EXPECT_NE(msg.find("$.extra"), std::string::npos);
  EXPECT_NE(msg.find("$.sides[0].builder.params.b[0]"), std::string::npos);
  EXPECT_NE(msg.find("$.sides[1].name"), std::string::npos);
  EXPECT_NE(msg.find("$.sides[1].builder.name"), std::string::npos);
}

TEST(ParseModel, SyntaxErrorCarriesLineAndColumn)
{
  const std::string msg = message_of([] { (void)parse_model_text("{\n  \"label\": x\n}", "doc.model"); });
  EXPECT_NE(msg.find("doc.model:2:"), std::string::npos) << msg;
  EXPECT_EQ(code_of([] { (void)parse_model_text("{\n  \"label\": x\n}"); }), ErrorCode::Config);
}

TEST(ParseModel, UnreadableFileIsAnIoError)
{
  EXPECT_EQ(code_of([] { (void)parse_model("/nonexistent/dir/x.model"); }), ErrorCode::Io);
}

TEST(ParseModel, ShippedModelsParse)
{
  for ( const char* name : {"free", "sinh", "sinh_flip", "massive", "broken_crossing", "on_template"} ) {
    const ModelDocument doc = parse_model(model_path(name));
    EXPECT_EQ(doc.label, name);
    for ( const auto& s : doc.sides )
      EXPECT_NO_THROW((void)build_side(s)) << name;
  }
  const ModelDocument flip = parse_model(model_path("sinh_flip"));
  ASSERT_TRUE(flip.lr.has_value());
  EXPECT_EQ(flip.lr->name, "flip");
  EXPECT_EQ(flip.sides.size(), 2u);
  EXPECT_EQ(build_lr(flip)->kind(), DeclaredKind::LR);
  // The O(N) example marks its coefficient functions as user-supplied.
  EXPECT_NE(parse_model(model_path("on_template")).sides[0].builder.note.find("O(N)"), std::string::npos);
}

TEST(ParseModel, OverridesApply)
{
  ModelDocument doc = parse_model_text(minimal_free);
  Overrides o;
  o.suite = "all";
  o.grid = 16;
  o.qmax = 5.0;
  o.nmax = 2;
  o.tol_algebraic = 1e-9;
  o.tol_quadrature = 1e-7;
  o.seed = 7;
  apply_overrides(doc, o);
  EXPECT_EQ(doc.suites, suite_names());
  EXPECT_EQ(doc.sides[0].grid.G, 16);
  EXPECT_EQ(doc.sides[0].grid.qmax, 5.0);
  EXPECT_EQ(doc.nmax, 2);
  EXPECT_EQ(doc.tol.algebraic, 1e-9);
  EXPECT_EQ(doc.tol.quadrature, 1e-7);
  EXPECT_EQ(doc.seed, 7u);
  Overrides bad;
  bad.suite = "everything";
  EXPECT_EQ(code_of([&] { apply_overrides(doc, bad); }), ErrorCode::Config);
  Overrides neg;
  neg.tol_algebraic = -1.0;
  EXPECT_EQ(code_of([&] { apply_overrides(doc, neg); }), ErrorCode::Config);
}

////////////////////////////////////////////////////////////////////////////////
// Suites

TEST(RunSuite, FreeModelPasses)
{
  const ValidationReport r = run_suite(parse_model(model_path("free")));
  EXPECT_FALSE(r.entries.empty());
  EXPECT_TRUE(r.failures(true).empty());
  EXPECT_EQ(exit_status(r, true), 0);
}

TEST(RunSuite, SinhFlipBundlePasses)
{
  const ValidationReport r = run_suite(parse_model(model_path("sinh_flip")));
  EXPECT_TRUE(r.failures(true).empty()) << report_text(r);
  for ( const char* axiom : {"plus.ll.crossing.boundary", "minus.ll.ybe", "lr.mixed_ybe", "lr.lr_crossing.boundary",
                             "twist.projector_commutation.left", "twist.projector_commutation.right",
                             "massless.vacuum_fixed", "plus.fock.flip_product.n3", "minus.fock.particle_bounds"} )
    EXPECT_NE(find_entry(r, axiom), nullptr) << axiom;
}

TEST(RunSuite, MassiveModelPasses)
{
  const ValidationReport r = run_suite(parse_model(model_path("massive")));
  EXPECT_TRUE(r.failures(true).empty()) << report_text(r);
  ASSERT_NE(find_entry(r, "massive.block_diagonal"), nullptr);
  ASSERT_NE(find_entry(r, "massive.spectrum_positivity"), nullptr);
}

TEST(RunSuite, BrokenCrossingHasExactlyOneFailure)
{
  const ValidationReport r = run_suite(parse_model(model_path("broken_crossing")));
  const auto failures = r.failures();
  ASSERT_EQ(failures.size(), 1u) << report_text(r);
  EXPECT_EQ(failures[0]->axiom, "chiral.ll.crossing.boundary");
  EXPECT_EQ(exit_status(r, false), 1);
  // The text summary lists the failing axiom with residual and tolerance.
  const std::string text = report_text(r);
  EXPECT_NE(text.find("failing entries:\n  chiral.ll.crossing.boundary: residual"), std::string::npos) << text;
}

TEST(RunSuite, SkippedSuitesAndStrictMode)
{
  ModelDocument doc = parse_model(model_path("sinh"));
  Overrides o;
  o.suite = "massive";
  apply_overrides(doc, o);
  const ValidationReport r = run_suite(doc);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].status, "skipped");
  EXPECT_EQ(exit_status(r, false), 0);
  EXPECT_EQ(exit_status(r, true), 1);
}

TEST(RunSuite, CapacityErrorsStayPerCheck)
{
  ModelDocument doc = parse_model(model_path("sinh"));
  Overrides o;
  o.suite = "fock";
  o.grid = 2048;
  apply_overrides(doc, o);
  const ValidationReport r = run_suite(doc);
  const ReportEntry* pb = find_entry(r, "chiral.fock.particle_bounds");
  ASSERT_NE(pb, nullptr);
  EXPECT_EQ(pb->status, "error");
  EXPECT_EQ(pb->note.rfind("capacity", 0), 0u) << pb->note;
  // The other checks of the suite still ran and passed.
  const ReportEntry* idem = find_entry(r, "chiral.fock.projector.idempotency.n3");
  ASSERT_NE(idem, nullptr);
  EXPECT_TRUE(idem->pass);
  EXPECT_EQ(exit_status(r, false), 3);
}

TEST(RunSuite, LocalitySuiteRecordsSeries)
{
  // Small grid: only the bookkeeping is checked here (the residual
  // magnitudes are the subject of the acceptance run).
  ModelDocument doc = parse_model(model_path("sinh_flip"));
  Overrides o;
  o.suite = "locality";
  o.grid = 16;
  apply_overrides(doc, o);
  const ValidationReport r = run_suite(doc);
  for ( const char* axiom : {"plus.locality.field", "plus.locality.field.route", "plus.locality.field.convergence",
                             "plus.locality.field.control", "twisted_commutator.left", "twisted_commutator.right.route"} )
    EXPECT_NE(find_entry(r, axiom), nullptr) << axiom;
  EXPECT_TRUE(find_entry(r, "plus.locality.field.route")->pass);
  EXPECT_TRUE(find_entry(r, "twisted_commutator.left.route")->pass);
  EXPECT_TRUE(find_entry(r, "plus.locality.field.control")->pass);
  // Series points: both sizes for every field and twisted commutator.
  EXPECT_EQ(r.series.size(), 8u);
  EXPECT_EQ(r.series[0].G, 8);
  EXPECT_EQ(r.series[1].G, 16);
}

TEST(ExitStatus, Precedence)
{
  ValidationReport r;
  EXPECT_EQ(exit_status(r, true), 0);
  r.add(make_entry("a", 0.0, 1, 1.0));
  EXPECT_EQ(exit_status(r, false), 0);
  r.add(error_entry("b", Error(ErrorCode::Capacity, "too big"), 1.0));
  EXPECT_EQ(exit_status(r, false), 3);
  r.add(make_entry("c", 2.0, 1, 1.0));
  EXPECT_EQ(exit_status(r, false), 1);
  ValidationReport n;
  n.add(error_entry("d", Error(ErrorCode::Numerical, "no convergence"), 1.0));
  EXPECT_EQ(exit_status(n, false), 1);
}

////////////////////////////////////////////////////////////////////////////////
// Emitters

TEST(Emit, EmptyReportGivesHeaderOnlyCsv)
{
  EXPECT_EQ(report_csv(ValidationReport{}), "axiom,G,residual\n");
}

TEST(Emit, CsvRowsInInsertionOrderWith17Digits)
{
  ValidationReport r;
  r.series = {{"z.first", 64, 0.1}, {"a.second", 32, 1.0 / 3.0}, {"m.third", 128, 2.5e-300}};
  const std::string csv = report_csv(r);
  EXPECT_EQ(csv, "axiom,G,residual\n"
                 "z.first,64,0.10000000000000001\n"
                 "a.second,32,0.33333333333333331\n"
                 "m.third,128,2.5e-300\n");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST(Emit, StructuredReportRoundTrips)
{
  ValidationReport r;
  r.model_label = "round \"trip\"";
  r.grid_description = "G=32";
  r.add(make_entry("x.pass", 1.0 / 3.0, 12, 1e-10, "note, with comma"));
  r.add(make_entry("x.fail", 0.5, 1, 1e-10));
  r.add(error_entry("x.error", Error(ErrorCode::Capacity, "too large"), 1e-5));
  r.add(skipped_entry("x.skip", "not applicable"));
  r.series = {{"x.pass", 16, 0.25}, {"x.pass", 32, std::numeric_limits<double>::infinity()}};
  const std::string text = report_json(r);
  const ValidationReport back = parse_report_json(text);
  EXPECT_EQ(back, r);
  EXPECT_EQ(report_json(back), text);
  EXPECT_TRUE(std::isinf(back.entries[2].residual));
  // NaN residuals are written as "nan" and read back as NaN.
  ValidationReport n;
  n.series = {{"y", 8, std::numeric_limits<double>::quiet_NaN()}};
  EXPECT_TRUE(std::isnan(parse_report_json(report_json(n)).series[0].residual));
  // Malformed documents are configuration errors.
  EXPECT_EQ(code_of([] { (void)parse_report_json("{\"model_label\": 1}"); }), ErrorCode::Config);
}

TEST(Emit, WriteFailureIsAnIoError)
{
  EXPECT_EQ(code_of([] { write_text_file("/nonexistent/dir/report.json", "x"); }), ErrorCode::Io);
}

////////////////////////////////////////////////////////////////////////////////
// Golden reports and determinism

TEST(Golden, ShippedModelsMatchTheirGoldenReports)
{
  for ( const char* name : {"free", "sinh", "sinh_flip", "massive", "broken_crossing", "on_template"} ) {
    const ValidationReport golden = parse_report_json(slurp(models + "/golden/" + name + ".report.json"));
    const ValidationReport r = run_suite(parse_model(model_path(name)));
    EXPECT_EQ(r.model_label, golden.model_label);
    EXPECT_EQ(r.grid_description, golden.grid_description);
    ASSERT_EQ(r.entries.size(), golden.entries.size()) << name;
    for ( std::size_t i = 0; i < r.entries.size(); ++i ) {
      const ReportEntry& a = r.entries[i];
      const ReportEntry& b = golden.entries[i];
      EXPECT_EQ(a.axiom, b.axiom) << name;
      EXPECT_EQ(a.status, b.status) << name << " " << a.axiom;
      EXPECT_EQ(a.samples, b.samples) << name << " " << a.axiom;
      EXPECT_EQ(a.tolerance, b.tolerance) << name << " " << a.axiom;
      EXPECT_EQ(a.note, b.note) << name << " " << a.axiom;
      // Rounding-level residuals may differ between platforms.
      EXPECT_LE(std::abs(a.residual - b.residual), 1e-13 + 1e-6 * std::abs(b.residual)) << name << " " << a.axiom;
    }
    EXPECT_EQ(r.series, golden.series) << name;
  }
}

TEST(Golden, RepeatedRunsAreByteIdentical)
{
  ModelDocument doc = parse_model(model_path("sinh_flip"));
  Overrides o;
  o.seed = 7;
  apply_overrides(doc, o);
  EXPECT_EQ(report_json(run_suite(doc)), report_json(run_suite(doc)));
}

////////////////////////////////////////////////////////////////////////////////
// The executable

TEST(Tool, ExitCodes)
{
  EXPECT_EQ(run_tool("validate " + model_path("free")), 0);
  EXPECT_EQ(run_tool("validate " + model_path("broken_crossing")), 1);
  EXPECT_EQ(run_tool("validate /nonexistent.model"), 2);
  EXPECT_EQ(run_tool("validate " + model_path("sinh") + " --suite nonsense"), 2);
  EXPECT_EQ(run_tool("validate " + model_path("sinh") + " --grid 1"), 2);
  EXPECT_EQ(run_tool("validate " + model_path("sinh") + " --suite massive"), 0);
  EXPECT_EQ(run_tool("validate " + model_path("sinh") + " --suite massive --strict"), 1);
  EXPECT_EQ(run_tool("validate " + model_path("sinh") + " --suite fock --grid 2048"), 3);
  EXPECT_EQ(run_tool("frobnicate"), 2);
  const std::string bad = temp_path("b4.model");
  write_text_file(bad, with_sides(
    R"([ { "name": "s", "dim": 1, "builder": { "name": "sinh", "params": { "b": [4.0], "sign": 1 } } } ])"));
  EXPECT_EQ(run_tool("validate " + bad), 2);
}

TEST(Tool, ReportAndCsvFiles)
{
  const std::string rep = temp_path("free.json"), csv = temp_path("free.csv");
  ASSERT_EQ(run_tool("validate " + model_path("free") + " --report " + rep + " --csv " + csv), 0);
  const ValidationReport r = parse_report_json(slurp(rep));
  EXPECT_EQ(r.model_label, "free");
  EXPECT_EQ(slurp(csv), "axiom,G,residual\n");
  // An unwritable report path is an I/O error (configuration class).
  EXPECT_EQ(run_tool("validate " + model_path("free") + " --report /nonexistent/dir/r.json"), 2);
}

TEST(Tool, SeededRunsAreByteIdentical)
{
  const std::string a = temp_path("run_a.json"), b = temp_path("run_b.json");
  ASSERT_EQ(run_tool("validate " + model_path("sinh_flip") + " --seed 7 --report " + a), 0);
  ASSERT_EQ(run_tool("validate " + model_path("sinh_flip") + " --seed 7 --report " + b), 0);
  EXPECT_FALSE(slurp(a).empty());
  EXPECT_EQ(slurp(a), slurp(b));
}
