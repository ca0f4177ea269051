#pragma once

#include <string>
#include <string_view>

#include "cir/stream.hpp"

namespace cir {

/// Serializes a stream to the self-describing `.cir` text format:
/// a JSON document with `version`, `config`, `schedule` (first occurrences,
/// repetition probabilities, and the row-major presence bitmatrix as base64)
/// and `experiences` (class -> sample-id lists). Output is byte-stable for a
/// given stream.
std::string serialize_stream(const Stream& stream);

/// Inverse of serialize_stream. Throws ParseError (with byte offset) on
/// malformed input and ConfigError when the document is well-formed JSON but
/// violates the schema or its own invariants.
Stream deserialize_stream(std::string_view bytes);

void write_stream_file(const Stream& stream, const std::string& path);
Stream read_stream_file(const std::string& path);

}  // namespace cir
