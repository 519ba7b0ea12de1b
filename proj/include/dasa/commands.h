// include/dasa/commands.h

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

#ifndef DASA_COMMANDS_H_
#define DASA_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

#include "dasa/loss_family.h"

namespace dasa {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// One entry of compare.variants: "variant[:difficulty[:strength[:lambda0]]]".
/// Omitted fields fall back to the base configuration.
struct CompareEntry {
  LossVariant variant = LossVariant::kDasa;
  std::string difficulty;  // empty: inherit
  std::string strength;    // empty: inherit
  std::string lambda0;     // empty: inherit

  bool operator==(const CompareEntry &) const = default;
};

CompareEntry ParseCompareEntry(const std::string &text);

/// Entry point of the dasa-lab tool. Subcommands: gen, train, compare,
/// bound-check, grad-check, score. Returns the process exit code.
int RunCli(int argc, const char *const *argv, std::ostream &out,
           std::ostream &err);
int RunCli(const std::vector<std::string> &args, std::ostream &out,
           std::ostream &err);

}  // namespace dasa

#endif  // DASA_COMMANDS_H_
