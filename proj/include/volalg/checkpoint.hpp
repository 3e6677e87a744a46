#ifndef VOLALG_CHECKPOINT_HPP
#define VOLALG_CHECKPOINT_HPP

#include <iosfwd>
#include <string>

#include "volalg/optimizers.hpp"

namespace volalg {

/// Versioned text checkpoint for optimizer states. Layout (one entry per
/// line, space separated):
///
///   volalg-checkpoint 1
///   kind <volume|momentum|adam|rmsprop>
///   scalar <name> <hexfloat>
///   int <name> <decimal>
///   vec <name> <length> <hexfloat>...
///   end
///
/// Doubles are written as C hexfloats ("%a"), so a round trip is bit exact.
void save_checkpoint(const OptimizerState& state, std::ostream& out);
void save_checkpoint(const OptimizerState& state, const std::string& path);

/// Throws ParseError on unknown version, kind, or malformed entries.
OptimizerState load_checkpoint(std::istream& in);
OptimizerState load_checkpoint(const std::string& path);

}  // namespace volalg

#endif  // VOLALG_CHECKPOINT_HPP
