#pragma once

#include <string>
#include <vector>

#include "vmirror/geometry.hpp"
#include "vmirror/makeup_db.hpp"
#include "vmirror/recommender.hpp"

// JSON documents shared by the CLI and the HTTP service, so both emit the
// same bytes for the same inputs.

namespace vmirror {

// [{"rank": 1, "label": {...}, "attributes": "oval/almond/light", "score": ..., "template_id": ...,
//   "colors": {"eyeshadow": "#rrggbb", "lip": ..., "foundation": ...}}, ...]
std::string format_cards(const std::vector<RecommendationCard>& cards);

// {"templates": [{"id", "mean_color", "thumbnail"}], "eyeshadow": [{"index", "hex", "lab"}], "lip": [...],
//  "foundation": [...]}; entries follow DB index order.
std::string format_catalog(const MakeupDB& db);

// {"schema": "contour68", "image_width", "image_height", "confidence", "points": [[x, y], ...]}
std::string format_landmarks_json(const LandmarkSet& landmarks);
// Accepts the document above; width and height default to the given image
// size and must match it when present.
LandmarkSet parse_landmarks_json(const std::string& text, int image_width, int image_height);

}  // namespace vmirror
