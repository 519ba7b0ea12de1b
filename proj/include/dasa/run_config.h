// include/dasa/run_config.h

// Copyright 2026  The dasa-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef DASA_RUN_CONFIG_H_
#define DASA_RUN_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dasa/synth_data.h"
#include "dasa/tiny_trainer.h"

namespace dasa {

/**
   Flat "key = value" configuration with dotted keys. Every key has a
   default; unknown keys are rejected. Lines starting with '#' are comments.
   Serialize() writes every key in sorted order, so a written file fully
   determines a run.
*/
class RunConfig {
 public:
  RunConfig();

  void LoadFile(const std::string &path);
  /// Parses one "key=value" assignment (spaces around '=' allowed).
  void Assign(const std::string &assignment);
  void Set(const std::string &key, const std::string &value);

  bool Has(const std::string &key) const;
  const std::string &Get(const std::string &key) const;
  double GetDouble(const std::string &key) const;
  int64_t GetInt(const std::string &key) const;
  bool GetBool(const std::string &key) const;
  std::vector<std::string> GetList(const std::string &key) const;

  std::string Serialize() const;
  void Write(const std::string &path) const;

  static const std::vector<std::pair<std::string, std::string>> &Defaults();

 private:
  std::map<std::string, std::string> values_;
};

SynthSpec ToSynthSpec(const RunConfig &config);
/// Resolves loss.difficulty=auto by variant; sched.total_iters=auto stays 0
/// (computed by Train).
TrainConfig ToTrainConfig(const RunConfig &config);

/// "auto" for a difficulty resolves to none for softmax/isda/am and DA for
/// daam/dasa.
Difficulty DefaultDifficulty(LossVariant variant);

}  // namespace dasa

#endif  // DASA_RUN_CONFIG_H_
