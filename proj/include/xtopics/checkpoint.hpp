#pragma once

#include <iosfwd>
#include <string>

#include "xtopics/chdp.hpp"
#include "xtopics/clda.hpp"

namespace xtopics {

// Checkpoint container: magic + version, a JSON header (kind, config,
// vocabulary hash, dimensions), then named length-prefixed binary sections
// holding the count tables and per-token assignments. Doubles are stored as
// raw IEEE-754 bytes, so save -> load -> save is bit-exact.

// Peeks at the header without loading the tables.
struct CheckpointInfo {
  std::string kind;  // "clda" | "chdp"
  int vocab_size = 0;
  std::uint64_t vocab_hash = 0;
  int sweeps_done = 0;
};
CheckpointInfo read_checkpoint_info(std::istream& in);
CheckpointInfo read_checkpoint_info_file(const std::string& path);

void save_checkpoint(const CldaState& state, std::ostream& out);
void save_checkpoint(const ChdpState& state, std::ostream& out);
void save_checkpoint_file(const CldaState& state, const std::string& path);
void save_checkpoint_file(const ChdpState& state, const std::string& path);

// `corpus` may be null when the state is only used for snapshots / topic
// export; resuming training requires the corpus the checkpoint was built
// from (vocabulary hash and document shape are verified when given).
CldaState load_clda_checkpoint(std::istream& in,
                               std::shared_ptr<const Corpus> corpus);
ChdpState load_chdp_checkpoint(std::istream& in,
                               std::shared_ptr<const Corpus> corpus);
CldaState load_clda_checkpoint_file(const std::string& path,
                                    std::shared_ptr<const Corpus> corpus);
ChdpState load_chdp_checkpoint_file(const std::string& path,
                                    std::shared_ptr<const Corpus> corpus);

}  // namespace xtopics
