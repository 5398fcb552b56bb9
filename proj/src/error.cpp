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

#include "rsf/error.hpp"
#include "rsf/types.hpp"

#include <Eigen/Eigenvalues>

namespace rsf {

  const char* error_code_name( ErrorCode c )
  {
    switch (c) {
    case ErrorCode::Structural: return "structural";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Parameter: return "parameter";
    case ErrorCode::InsufficientDomain: return "insufficient-domain";
    case ErrorCode::Numerical: return "numerical";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Capacity: return "capacity";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
    }
    return "unknown";
  }

  int exit_code_for( ErrorCode c )
  {
    switch (c) {
    case ErrorCode::Capacity: return 3;
    case ErrorCode::Config:
    case ErrorCode::Io:
    case ErrorCode::Parameter: return 2;
    default: return 1;
    }
  }

  double spectral_norm( const CMatrix& m )
  {
    if ( m.size() == 0 )
      return 0.0;
    if ( !m.allFinite() )
      return std::numeric_limits<double>::infinity();
    if ( m.rows() == 1 || m.cols() == 1 )
      return m.norm();
    return m.operatorNorm();
  }

}
