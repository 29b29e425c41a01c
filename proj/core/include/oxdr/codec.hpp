#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oxdr/model.hpp"
#include "oxdr/registry.hpp"

namespace oxdr::codec {

enum class Encoding { ndjson, binary };

std::string_view to_string(Encoding e) noexcept;
std::optional<Encoding> parse_encoding(std::string_view text) noexcept;

inline constexpr std::string_view kNdjsonExtension = ".oxdr.ndjson";
inline constexpr std::string_view kBinaryExtension = ".oxdr.mp";

/// Encoding implied by a file name (".oxdr.ndjson"/".ndjson" or
/// ".oxdr.mp"/".mp"), if any.
std::optional<Encoding> encoding_from_path(const std::filesystem::path& path);

/// Guesses the encoding from the first byte of a stream: '{' or whitespace is
/// ndjson, a MessagePack map header is binary.
std::optional<Encoding> sniff_encoding(std::span<const std::byte> head) noexcept;

/// What to do with Extension values whose type is not registered.
enum class ExtensionPolicy {
  strict,       // raise unknown_type
  passthrough,  // keep the payload as opaque bytes
};

struct EncodeOptions {
  const TypeRegistry* registry = nullptr;  // nullptr -> TypeRegistry::global()
  ExtensionPolicy extensions = ExtensionPolicy::strict;
};

struct DecodeOptions {
  const TypeRegistry* registry = nullptr;
  ExtensionPolicy extensions = ExtensionPolicy::strict;
  std::size_t max_record_bytes = std::size_t{64} << 20;
};

/// Encodes one record: ndjson yields a single LF-terminated line, binary a
/// single MessagePack value. Throws Error(non_finite) for NaN/Inf and
/// Error(unregistered_extension) for unknown Extension types.
std::string encode_record(const Record& record, Encoding encoding,
                          const EncodeOptions& options = {});

/// Whole-buffer form of a record stream.
struct EncodedStream {
  Encoding encoding = Encoding::ndjson;
  std::string bytes;
  std::size_t record_count = 0;
};

EncodedStream encode_stream(std::span<const Record> records, Encoding encoding,
                            const EncodeOptions& options = {});

/// Pull decoder over a byte stream. Memory use is bounded by the largest
/// single record, not the stream length.
///
/// next() returns std::nullopt at a clean end of stream and throws
/// DecodeError on malformed input. After an error the reader is exhausted.
class RecordReader {
 public:
  RecordReader(std::istream& in, Encoding encoding, DecodeOptions options = {});
  ~RecordReader();
  RecordReader(RecordReader&&) noexcept;
  RecordReader& operator=(RecordReader&&) noexcept;

  std::optional<Record> next();

  Encoding encoding() const noexcept;
  /// Number of records returned so far.
  std::size_t records_read() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience: decode a whole buffer. Throws on the first error.
std::vector<Record> decode_all(std::string_view bytes, Encoding encoding,
                               const DecodeOptions& options = {});

struct WriterOptions {
  EncodeOptions encode;
  /// Reserve room at the head of the stream so finalize() can rewrite the
  /// metadata record in place once end_time is known. Requires a seekable
  /// stream.
  bool reserve_finalization = false;
};

/// Streaming encoder bound to an output stream.
class RecordWriter {
 public:
  RecordWriter(std::ostream& out, Encoding encoding, WriterOptions options = {});

  void write(const Record& record);

  /// Rewrites the head metadata record with `final_metadata` (normally the
  /// original plus end_time). The first record written must have been
  /// metadata and reserve_finalization must be set.
  void finalize(const RecordingMetadata& final_metadata);

  std::size_t records_written() const noexcept { return records_; }
  std::uint64_t bytes_written() const noexcept { return bytes_; }
  Encoding encoding() const noexcept { return encoding_; }

 private:
  void put(std::string_view bytes);

  std::ostream& out_;
  Encoding encoding_;
  WriterOptions options_;
  std::size_t records_ = 0;
  std::uint64_t bytes_ = 0;
  std::optional<std::size_t> reserved_head_size_;
  std::streamoff head_position_ = 0;
};

/// Decodes `in` and re-encodes every record into `out`. Unregistered
/// Extension payloads are carried through untouched. Returns the record count.
std::size_t transcode(std::istream& in, Encoding from, std::ostream& out, Encoding to,
                      const TypeRegistry* registry = nullptr);

}  // namespace oxdr::codec
