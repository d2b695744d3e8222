#include "pdae/error.hpp"

namespace pdae {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::singular_matrix: return "singular_matrix";
    case ErrorCode::domain: return "domain";
    case ErrorCode::constraint_not_onto: return "constraint_not_onto";
    case ErrorCode::policy: return "policy";
    case ErrorCode::inconsistent: return "inconsistent";
    case ErrorCode::multiplier_unavailable: return "multiplier_unavailable";
    case ErrorCode::not_affine: return "not_affine";
    case ErrorCode::reaction_blow_up: return "reaction_blow_up";
    case ErrorCode::reference_unreliable: return "reference_unreliable";
    case ErrorCode::config: return "config";
  }
  return "unknown";
}

}  // namespace pdae
