#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "drf/core/config.hpp"
#include "drf/trainer/adam.hpp"
#include "drf/trainer/model.hpp"

namespace drf {

// Everything needed to resume a run bit-exactly: config echo, parameters,
// optimizer moments, data-order RNG state and the step counter.
struct Checkpoint {
  RunConfig config;
  std::vector<std::vector<double>> params;   // param_refs order
  std::vector<std::vector<double>> adam_m1;
  std::vector<std::vector<double>> adam_m2;
  std::int64_t opt_step = 0;
  std::array<std::uint64_t, 4> rng_state{};
  std::int64_t epoch = 0;
};

// Fixed-header binary layout (little-endian):
//   8-byte magic "DRFCKPT\n", u32 format version,
//   u64 config text length + bytes,
//   i64 optimizer step, i64 epoch, 4 x u64 rng state,
//   u64 array count, then per array: u64 length + f64 values,
// with parameters first, then first moments, then second moments, each in
// param_refs declaration order. Errors: VersionMismatch, CorruptPayload.
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

template <class T>
Checkpoint make_checkpoint(const RunConfig& cfg, Model<T>& model,
                           const AdamState<T>& opt, const Rng& rng,
                           std::int64_t epoch) {
  Checkpoint ck;
  ck.config = cfg;
  for (const auto& ref : param_refs(model))
    ck.params.emplace_back(ref.values->begin(), ref.values->end());
  for (const auto& slot : opt.m1) ck.adam_m1.emplace_back(slot.begin(), slot.end());
  for (const auto& slot : opt.m2) ck.adam_m2.emplace_back(slot.begin(), slot.end());
  ck.opt_step = opt.step;
  ck.rng_state = rng.state();
  ck.epoch = epoch;
  return ck;
}

template <class T>
void restore_model(const Checkpoint& ck, Model<T>& model, AdamState<T>& opt,
                   Rng& rng) {
  auto refs = param_refs(model);
  DRF_CHECK(refs.size() == ck.params.size(), CorruptPayload,
            "checkpoint: parameter slot count mismatch");
  for (std::size_t s = 0; s < refs.size(); ++s) {
    DRF_CHECK(refs[s].values->size() == ck.params[s].size(), CorruptPayload,
              "checkpoint: size mismatch in " + refs[s].name);
    for (std::size_t i = 0; i < ck.params[s].size(); ++i)
      (*refs[s].values)[i] = static_cast<T>(ck.params[s][i]);
    for (std::size_t i = 0; i < ck.params[s].size(); ++i) {
      opt.m1[s][i] = static_cast<T>(ck.adam_m1[s][i]);
      opt.m2[s][i] = static_cast<T>(ck.adam_m2[s][i]);
    }
  }
  opt.step = ck.opt_step;
  rng.set_state(ck.rng_state);
  model.version += 1;
}

}  // namespace drf
