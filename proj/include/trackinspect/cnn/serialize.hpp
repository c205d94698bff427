#pragma once
#include <string>
#include <variant>

#include "trackinspect/cnn/model.hpp"

namespace trackinspect::cnn {

// Binary model container: magic "RCNN", a format version, a precision flag
// (float32 or float64), the layer table, then the parameter payloads in
// little-endian order.  Round-trips are bit-exact.

using LoadedModel = std::variant<Model<float>, Model<double>>;

void save_model(const std::string& path, const Model<float>& m);
void save_model(const std::string& path, const Model<double>& m);

LoadedModel load_model(const std::string& path);

}  // namespace trackinspect::cnn
