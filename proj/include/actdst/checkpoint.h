// Binary checkpoints: "ADSTCKPT", a u32 format version, a JSON header
// (config, ontology hash and partition, vocabularies, counters, parameter
// shapes), the raw 64-bit parameter values and an FNV-1a payload checksum.

#ifndef ACTDST_CHECKPOINT_H_
#define ACTDST_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <memory>

#include "actdst/model.h"
#include "actdst/ontology.h"
#include "actdst/training.h"

namespace actdst {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct LoadedCheckpoint {
  RunConfig config;
  int epoch = 0;
  long step = 0;
  std::unique_ptr<Model> model;
};

void save_checkpoint(Model& model, const RunConfig& config, int epoch,
                     long step, const std::filesystem::path& path);

// Only the run configuration stored in the header.
RunConfig read_checkpoint_config(const std::filesystem::path& path);

// `ontology` is the unpartitioned file the model was trained against; the
// stored partition is applied to it. Throws CheckpointError on a bad magic,
// an unsupported version, a corrupt payload or an ontology-hash mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const Ontology& ontology);

}  // namespace actdst

#endif  // ACTDST_CHECKPOINT_H_
