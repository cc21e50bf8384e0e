#pragma once

#include <stdexcept>
#include <string>

namespace qgame {

enum class ErrorKind {
  SelfLoop,
  NonPositiveWeight,
  NoSpanningTree,
  SingularPinnedLaplacian,
  DimensionMismatch,
  UnknownAgent,
  MissingNeighborInput,
  BadNeighborOrder,
  NotReachable,
  NumericalDivergence,
  WrongMode,
  SingularWeight,
  TailTooLarge,
  RankDeficient,
  ResidualTooLarge,
  WrongCurvature,
  Singular,
  SingularSchurComplement,
  SingularBlockMatrix,
  NotAdmissible,
  MaxIterations,
  NoConvergence,
  IllPosedSaddle,
  NonFiniteWeights,
  MissingReference,
  ParseError,
  ValidationError,
  InvalidArgument,
};

const char* kind_name(ErrorKind kind);

// Process exit code used by the command line tool for a given failure.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, long step = -1);

  ErrorKind kind() const noexcept { return kind_; }
  // Simulation step at which the failure was detected, -1 when not applicable.
  long step() const noexcept { return step_; }

 private:
  ErrorKind kind_;
  long step_;
};

}  // namespace qgame
