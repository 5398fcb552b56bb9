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

// rsf: validates scattering-function models described by a model document.
//
//   rsf validate <model-file> [--suite ll|lr|fock|locality|massive|all]
//       [--nmax N] [--grid G] [--qmax X] [--tol-algebraic T]
//       [--tol-quadrature T] [--seed S] [--report PATH] [--csv PATH] [--strict]
//
// Exit codes: 0 pass, 1 validation failure, 2 configuration error,
// 3 capacity error.

#include "rsf/cli.hpp"
#include "rsf/error.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

  constexpr int exit_config = 2;

  int run_validate( const std::string& model_file, const rsf::cli::Overrides& overrides, bool strict )
  {
    rsf::cli::ModelDocument doc = rsf::cli::parse_model(model_file);
    rsf::cli::apply_overrides(doc, overrides);
    const rsf::ValidationReport report = rsf::cli::run_suite(doc);
    std::cout << rsf::cli::report_text(report, strict);
    if ( !doc.report_path.empty() )
      rsf::cli::write_text_file(doc.report_path, rsf::cli::report_json(report));
    if ( !doc.csv_path.empty() )
      rsf::cli::write_text_file(doc.csv_path, rsf::cli::report_csv(report));
    return rsf::cli::exit_status(report, strict);
  }

}

int main( int argc, char** argv )
{
  CLI::App app{"rsf: validation of R-symmetric Fock space models"};
  app.require_subcommand(1);

  CLI::App* validate = app.add_subcommand("validate", "Run validation suites on a model document");
  std::string model_file;
  rsf::cli::Overrides o;
  bool strict = false;
  validate->add_option("model-file", model_file, "Model document (JSON)")->required();
  validate->add_option("--suite", o.suite, "Suite to run")
    ->check(CLI::IsMember({"ll", "lr", "fock", "locality", "massive", "all"}));
  validate->add_option("--nmax", o.nmax, "Fock space truncation level");
  validate->add_option("--grid", o.grid, "Number of rapidity grid nodes");
  validate->add_option("--qmax", o.qmax, "Rapidity window half-width");
  validate->add_option("--tol-algebraic", o.tol_algebraic, "Tolerance of algebraic identities");
  validate->add_option("--tol-quadrature", o.tol_quadrature, "Tolerance of contour/quadrature identities");
  validate->add_option("--seed", o.seed, "Seed of the randomized checks");
  validate->add_option("--report", o.report_path, "Write the structured (JSON) report to this path");
  validate->add_option("--csv", o.csv_path, "Write the residual series (CSV) to this path");
  validate->add_flag("--strict", strict, "Count skipped checks as failures");

  try {
    app.parse(argc, argv);
  } catch ( const CLI::CallForHelp& e ) {
    return app.exit(e);
  } catch ( const CLI::CallForAllHelp& e ) {
    return app.exit(e);
  } catch ( const CLI::ParseError& e ) {
    app.exit(e);
    return exit_config;
  }

  try {
    return run_validate(model_file, o, strict);
  } catch ( const rsf::Error& e ) {
    std::cerr << "rsf: " << rsf::error_code_name(e.code()) << " error: " << e.what() << "\n";
    return rsf::exit_code_for(e.code());
  } catch ( const std::exception& e ) {
    std::cerr << "rsf: " << e.what() << "\n";
    return 1;
  }
}
