// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "json.hpp"

#include "vides/backend.hpp"
#include "vides/mask.hpp"
#include "vides/orchestrator.hpp"

namespace vides {

using Json = nlohmann::json;

// Missing keys keep their defaults, so partial objects are accepted.
void to_json(Json& j, const GenerationParams& p);
void from_json(const Json& j, GenerationParams& p);

void to_json(Json& j, const BackendCapabilities& c);
void from_json(const Json& j, BackendCapabilities& c);

/// {"type":"point","x":..,"y":..,"label":"fg"|"bg"} or
/// {"type":"box","x0":..,"y0":..,"x1":..,"y1":..}
void to_json(Json& j, const Interaction& i);
void from_json(const Json& j, Interaction& i);

void to_json(Json& j, const PostprocessRecord& r);
void from_json(const Json& j, PostprocessRecord& r);

void to_json(Json& j, const DesignJob& job);
void from_json(const Json& j, DesignJob& job);

/// Mask metadata only (interactions, postprocess, area fraction, size).
Json mask_metadata(const MaskSpec& mask);

/// Parses "x0,y0,x1,y1" / "x,y" style CLI arguments.
BoxInteraction parse_box(std::string_view text);
PointInteraction parse_point(std::string_view text, PointLabel label = PointLabel::foreground);

/// Wraps nlohmann parse/type errors as ValidationError.
Json parse_json(std::string_view text, std::string_view what = "request body");

}  // namespace vides

namespace vides {

/// Current UTC time as ISO 8601 with millisecond precision.
std::string utc_timestamp();

}  // namespace vides
