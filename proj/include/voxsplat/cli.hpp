// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace voxsplat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitInternalError = 2;

/// Entry point of the `voxsplat` tool. `args[0]` is the program name.
/// Subcommands: voxelize, condition, decode, render, sky build|sample, lidar,
/// pipeline, metrics, selftest.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace voxsplat::cli
