#include "ofbm/error.hpp"

namespace ofbm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::HurstOutOfRange: return "HurstOutOfRange";
    case ErrorCode::HurstUnsorted: return "HurstUnsorted";
    case ErrorCode::SingularMixing: return "SingularMixing";
    case ErrorCode::CovarianceNotPSD: return "CovarianceNotPSD";
    case ErrorCode::CorrelationInfeasible: return "CorrelationInfeasible";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmbeddingFailed: return "EmbeddingFailed";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::BadFilter: return "BadFilter";
    case ErrorCode::ScaleUnavailable: return "ScaleUnavailable";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::InsufficientCoefficients: return "InsufficientCoefficients";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::SampleTooSmall: return "SampleTooSmall";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NonPositiveDiagonal: return "NonPositiveDiagonal";
    case ErrorCode::NonPositiveEigenvalue: return "NonPositiveEigenvalue";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::BadProbability: return "BadProbability";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace ofbm
