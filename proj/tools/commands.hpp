#pragma once

#include "config.hpp"

namespace entk::cli {

// Each command returns a process exit code; errors propagate as exceptions.
int cmd_gram(const RunConfig& c);
int cmd_predict(const RunConfig& c);
int cmd_mc(const RunConfig& c);
int cmd_verify(const RunConfig& c);
int cmd_featurize(const RunConfig& c);
// inject_fault swaps the gconv lemma for its sign-flipped variant.
int cmd_selftest(bool inject_fault);

}  // namespace entk::cli
