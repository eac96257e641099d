// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/cli.hpp>

int main(int argc, char** argv) { return voxsplat::cli::run(argc, argv); }
