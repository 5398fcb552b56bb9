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

#ifndef RSF_ERROR_HPP
#define RSF_ERROR_HPP

#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rsf {

  // Every failure raised by the library carries one of these codes. The CLI
  // maps them onto process exit codes (see exit_code_for).
  enum class ErrorCode : int {
    Structural = 10,          // rank/leg/shape mismatch, bad permutation
    Domain = 11,              // argument outside the domain of an operation
    Parameter = 12,           // parameter outside its admissible range
    InsufficientDomain = 13,  // function known only on the real line
    Numerical = 14,           // quadrature did not converge
    Precondition = 15,        // a certified property failed to hold
    Capacity = 16,            // resource limit exceeded
    Config = 20,              // model document / command line problem
    Io = 21                   // file could not be read or written
  };

  const char* error_code_name( ErrorCode );

  class Error : public std::runtime_error {
  public:
    Error( ErrorCode c, const std::string& msg,
           double residual = std::numeric_limits<double>::quiet_NaN() )
      : std::runtime_error(msg), m_code(c), m_residual(residual) {}
    ErrorCode code() const noexcept { return m_code; }
    // Residual attached to precondition/numerical failures (NaN if none).
    double residual() const noexcept { return m_residual; }
  private:
    ErrorCode m_code;
    double m_residual;
  };

  // Process exit code used by the CLI for an error escaping a run.
  int exit_code_for( ErrorCode );

}

#define RSF_THROW(CODE, MSG)                                            \
  do {                                                                  \
    std::ostringstream rsf_throw_os_;                                   \
    rsf_throw_os_ << MSG;                                               \
    throw ::rsf::Error(::rsf::ErrorCode::CODE, rsf_throw_os_.str());    \
  } while (0)

#define RSF_THROW_RESIDUAL(CODE, RESIDUAL, MSG)                         \
  do {                                                                  \
    std::ostringstream rsf_throw_os_;                                   \
    rsf_throw_os_ << MSG;                                               \
    throw ::rsf::Error(::rsf::ErrorCode::CODE, rsf_throw_os_.str(),     \
                       (RESIDUAL));                                     \
  } while (0)

#endif
