// Copyright 2026 The meatkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "meatkit/correspondence.hpp"
#include "meatkit/rasterizer.hpp"

namespace meatkit {

// Runs one command line (without the program name). Returns 0 on success, 1 on a
// usage error (usage on `err`), 2 on a data or validation error.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Directory layouts used by the command line tool.
void write_raster(const std::filesystem::path& dir, const RasterMap& raster);
RasterMap read_raster(const std::filesystem::path& dir);
void write_aggregate(const std::filesystem::path& dir, const AggregatedRaster& agg);
AggregatedRaster read_aggregate(const std::filesystem::path& dir);
void write_correspondence(const std::filesystem::path& dir, const CorrespondenceTable& table);
CorrespondenceTable read_correspondence(const std::filesystem::path& dir);

}  // namespace meatkit
