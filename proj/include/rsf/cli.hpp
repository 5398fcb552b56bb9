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

#ifndef RSF_CLI_HPP
#define RSF_CLI_HPP

// Model documents, suite orchestration and report emitters behind the `rsf`
// command-line tool.
//
// A model document is a JSON object; every object in it has a fixed key set
// and unknown keys are rejected. Example (the flip-construction bundle):
//
//   { "schema_version": 1,
//     "label": "sinh_flip",
//     "sides": [ { "name": "plus",  "dim": 1, "bar": [1],
//                  "builder": { "name": "sinh", "params": { "b": [0.7853981633974483], "sign": 1 } } },
//                { "name": "minus", "dim": 1, "bar": [1],
//                  "builder": { "name": "sinh", "params": { "b": [0.7853981633974483], "sign": 1 } } } ],
//     "lr": { "name": "flip", "params": { "from": "plus" } },
//     "suites": ["ll", "lr", "fock"] }
//
// The bar involution is written 1-based. See README.md for the builder list.

#include "rsf/report.hpp"
#include "rsf/scattering.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace rsf::cli {

  inline constexpr int schema_version = 1;

  // The five suites in their fixed execution order.
  const std::vector<std::string>& suite_names();

  struct GridSpec {
    int G = 32;
    double qmax = 6.0;
  };

  // Builder name plus its parameter object (validated while parsing).
  struct BuilderSpec {
    std::string name;
    nlohmann::json params = nlohmann::json::object();
    std::string note;
    bool operator==( const BuilderSpec& ) const = default;
  };

  struct SideSpec {
    std::string name;
    int dim = 1;
    std::vector<int> bar;          // 0-based after parsing
    BuilderSpec builder;
    GridSpec grid;
    std::vector<double> masses;    // empty: massless side
  };

  struct ModelDocument {
    int version = schema_version;
    std::string label;
    std::vector<SideSpec> sides;   // one or two; the first is the plus side
    std::optional<BuilderSpec> lr;
    std::vector<std::string> suites;
    Tolerances tol;
    double commutation_tol = 1e-11;
    double locality_tol = 1e-5;
    int nmax = 3;
    std::uint64_t seed = 1;
    std::string report_path, csv_path;

    const SideSpec& plus() const { return sides.front(); }
    const SideSpec& minus() const { return sides.back(); }
  };

  // Parses and validates a document. Raises a config error listing every
  // schema violation with its field path (JSON syntax errors with line and
  // column), or a parameter error when only parameter ranges are violated.
  ModelDocument parse_model_text( const std::string& text, const std::string& source = "<document>" );
  // Reads the file first (I/O error if unreadable).
  ModelDocument parse_model( const std::string& path );

  // Command-line overrides; unset fields keep the document's values.
  struct Overrides {
    std::optional<std::string> suite;   // ll | lr | fock | locality | massive | all
    std::optional<int> nmax, grid;
    std::optional<double> qmax, tol_algebraic, tol_quadrature;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> report_path, csv_path;
  };
  // Config error for an unknown suite or out-of-range values.
  void apply_overrides( ModelDocument& doc, const Overrides& o );

  // The chiral functions and the LR function described by the document.
  MatrixScatteringFunction build_side( const SideSpec& side );
  RapidityGrid side_grid( const SideSpec& side );
  std::optional<MatrixScatteringFunction> build_lr( const ModelDocument& doc );

  // Runs the selected suites. Deterministic given the document (and its
  // seed); failures inside a check become error entries of that check.
  ValidationReport run_suite( const ModelDocument& doc );

  // 0 all selected checks pass; 1 some check fails (or, with strict, is
  // skipped); 3 no failure but some check hit a capacity limit.
  int exit_status( const ValidationReport& report, bool strict );

  //////////////////////////////////////////////////////////////////////////////
  // Emitters.

  // Human-readable summary listing every failing entry.
  std::string report_text( const ValidationReport& report, bool strict = false );
  // Structured report mirroring ValidationReport field by field. Non-finite
  // residuals are written as the strings "inf", "-inf" and "nan".
  std::string report_json( const ValidationReport& report );
  // Inverse of report_json (config error on malformed input).
  ValidationReport parse_report_json( const std::string& text );
  // "axiom,G,residual" rows of the refinement series, numbers with 17
  // significant digits, LF line ends.
  std::string report_csv( const ValidationReport& report );

  // Writes content to path (I/O error on failure).
  void write_text_file( const std::string& path, const std::string& content );

}

#endif
