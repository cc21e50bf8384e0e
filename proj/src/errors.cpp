#include "qgame/errors.hpp"

namespace qgame {

const char* kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SelfLoop: return "SelfLoop";
    case ErrorKind::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorKind::NoSpanningTree: return "NoSpanningTree";
    case ErrorKind::SingularPinnedLaplacian: return "SingularPinnedLaplacian";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnknownAgent: return "UnknownAgent";
    case ErrorKind::MissingNeighborInput: return "MissingNeighborInput";
    case ErrorKind::BadNeighborOrder: return "BadNeighborOrder";
    case ErrorKind::NotReachable: return "NotReachable";
    case ErrorKind::NumericalDivergence: return "NumericalDivergence";
    case ErrorKind::WrongMode: return "WrongMode";
    case ErrorKind::SingularWeight: return "SingularWeight";
    case ErrorKind::TailTooLarge: return "TailTooLarge";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorKind::WrongCurvature: return "WrongCurvature";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::SingularSchurComplement: return "SingularSchurComplement";
    case ErrorKind::SingularBlockMatrix: return "SingularBlockMatrix";
    case ErrorKind::NotAdmissible: return "NotAdmissible";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::IllPosedSaddle: return "IllPosedSaddle";
    case ErrorKind::NonFiniteWeights: return "NonFiniteWeights";
    case ErrorKind::MissingReference: return "MissingReference";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NumericalDivergence:
    case ErrorKind::NonFiniteWeights:
      return 3;
    case ErrorKind::NotAdmissible:
    case ErrorKind::MaxIterations:
    case ErrorKind::NoConvergence:
    case ErrorKind::IllPosedSaddle:
    case ErrorKind::WrongCurvature:
    case ErrorKind::Singular:
    case ErrorKind::SingularSchurComplement:
    case ErrorKind::SingularBlockMatrix:
    case ErrorKind::RankDeficient:
    case ErrorKind::ResidualTooLarge:
    case ErrorKind::TailTooLarge:
    case ErrorKind::MissingReference:
      return 4;
    default:
      return 2;
  }
}

Error::Error(ErrorKind kind, const std::string& what, long step)
    : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind), step_(step) {}

}  // namespace qgame
