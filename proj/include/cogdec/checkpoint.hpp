#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>

#include "cogdec/baseline.hpp"
#include "cogdec/consensus.hpp"
#include "cogdec/trainer.hpp"

namespace cogdec {

// Provenance recorded into every checkpoint and report manifest.
struct RunStamp {
    std::string config_hash;
    std::uint64_t seed = 0;
};

// FNV-1a 64 over the canonical config text, hex-encoded.
std::string hash_text(const std::string& text);

void save_model(const LinearDecoder& model, const std::filesystem::path& path,
                const RunStamp& stamp = {});
void save_model(const MultiStudyModel& model, const std::filesystem::path& path,
                const RunStamp& stamp = {});
void save_model(const ConsensusModel& model, const std::filesystem::path& path,
                const RunStamp& stamp = {});

using AnyModel = std::variant<LinearDecoder, MultiStudyModel, ConsensusModel>;

// Dispatches on the checkpoint's declared kind; throws data_error on bad
// magic, version, kind, or truncation (never returns a partial model).
AnyModel load_model(const std::filesystem::path& path);

LinearDecoder load_decoder(const std::filesystem::path& path);
MultiStudyModel load_multistudy(const std::filesystem::path& path);
ConsensusModel load_consensus(const std::filesystem::path& path);

RunStamp load_stamp(const std::filesystem::path& path);

}  // namespace cogdec
