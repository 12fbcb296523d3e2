#pragma once

#include <string>

#include "faopd/config.hpp"
#include "faopd/normalizer.hpp"
#include "faopd/policy.hpp"
#include "faopd/teacher.hpp"

namespace faopd {

// Text checkpoints: versioned header line, layer-width list, parameters as
// comma-separated decimals (17 significant digits, lossless round trip).
// The observation normalizer travels with both files so evaluation applies
// the training-time preprocessing.

struct TeacherCheckpoint {
    FmTeacher teacher;
    RunningNormalizer norm;
};

struct PolicyCheckpoint {
    GaussianPolicy policy;
    Mlp value_net;
    RunningNormalizer norm;
};

void save_teacher_checkpoint(const FmTeacher& teacher, const RunningNormalizer& norm,
                             const std::string& path);
TeacherCheckpoint load_teacher_checkpoint(const std::string& path);

void save_policy_checkpoint(const GaussianPolicy& policy, const Mlp& value_net,
                            const RunningNormalizer& norm, const std::string& path);
PolicyCheckpoint load_policy_checkpoint(const std::string& path);

// Width validation against a run configuration (load-time contract).
void check_teacher_matches_config(const FmTeacher& teacher, const RunConfig& cfg);

}  // namespace faopd
