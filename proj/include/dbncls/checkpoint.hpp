#ifndef DBNCLS_CHECKPOINT_HPP
#define DBNCLS_CHECKPOINT_HPP

#include <string>

#include "dbncls/strategies.hpp"

namespace dbncls {

// Versioned parameter container.
//
//   bytes 0..7   ASCII tag "DBNCKPT1"
//   u32 LE       layer count (>= 1)
//   per layer    u32 LE hidden size, u32 LE visible size
//   u32 LE       class count
//   f64 LE       per layer: W row-major, b, c; then U row-major, d
//
// Loading rejects unknown tags, truncated payloads, and dimension chains
// that do not line up, each with its own error code.
void save_checkpoint(const DbnParams& dbn, const ClassifierParams& cls, const std::string& path);
void save_checkpoint(const TrainedModel& model, const std::string& path);

TwoPhaseSnapshot load_checkpoint(const std::string& path);

} // namespace dbncls

#endif
