#include "oxdr/codec.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "json_writer.hpp"
#include "msgpack.hpp"
#include "tree.hpp"

namespace oxdr::codec {

using detail::JsonWriter;
using detail::MsgpackWriter;

std::string_view to_string(Encoding e) noexcept {
  return e == Encoding::ndjson ? "ndjson" : "binary";
}

std::optional<Encoding> parse_encoding(std::string_view text) noexcept {
  if (text == "ndjson") return Encoding::ndjson;
  if (text == "binary" || text == "msgpack") return Encoding::binary;
  return std::nullopt;
}

std::optional<Encoding> encoding_from_path(const std::filesystem::path& path) {
  const auto name = path.filename().string();
  if (name.ends_with(".ndjson") || name.ends_with(".jsonl")) return Encoding::ndjson;
  if (name.ends_with(".mp") || name.ends_with(".msgpack")) return Encoding::binary;
  return std::nullopt;
}

std::optional<Encoding> sniff_encoding(std::span<const std::byte> head) noexcept {
  for (auto b : head) {
    const auto c = std::to_integer<unsigned char>(b);
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
    if (c == '{') return Encoding::ndjson;
    if ((c & 0xf0) == 0x80 || c == 0xde || c == 0xdf) return Encoding::binary;
    return std::nullopt;
  }
  return std::nullopt;
}

std::string encode_record(const Record& record, Encoding encoding,
                          const EncodeOptions& options) {
  std::string out;
  if (encoding == Encoding::ndjson) {
    JsonWriter w(out);
    detail::write_record(w, record, options);
    out += '\n';
  } else {
    MsgpackWriter w(out);
    detail::write_record(w, record, options);
  }
  return out;
}

EncodedStream encode_stream(std::span<const Record> records, Encoding encoding,
                            const EncodeOptions& options) {
  EncodedStream stream;
  stream.encoding = encoding;
  for (const auto& r : records) {
    stream.bytes += encode_record(r, encoding, options);
    ++stream.record_count;
  }
  return stream;
}

// ---------------------------------------------------------------------------
// Reader
// ---------------------------------------------------------------------------

struct RecordReader::Impl {
  Impl(std::istream& in, Encoding enc, DecodeOptions opts)
      : buf(*in.rdbuf()), encoding(enc), options(opts), msgpack(buf, opts.max_record_bytes) {}

  std::optional<Record> next_ndjson();
  std::optional<Record> next_binary();
  bool read_line();

  std::streambuf& buf;
  Encoding encoding;
  DecodeOptions options;
  detail::MsgpackReader msgpack;

  // ndjson state
  std::vector<char> chunk = std::vector<char>(std::size_t{1} << 16);
  std::size_t chunk_pos = 0;
  std::size_t chunk_len = 0;
  std::string line;
  std::uint64_t offset = 0;       // bytes consumed so far
  std::uint64_t line_start = 0;   // offset of the current line
  std::uint64_t line_number = 0;  // 1-based number of the current line
  bool line_terminated = false;

  std::size_t count = 0;
  bool done = false;
};

// Reads up to and including the next LF. Returns false at end of stream with
// nothing read.
bool RecordReader::Impl::read_line() {
  line.clear();
  line_start = offset;
  line_terminated = false;
  for (;;) {
    if (chunk_pos == chunk_len) {
      chunk_len = static_cast<std::size_t>(
          buf.sgetn(chunk.data(), static_cast<std::streamsize>(chunk.size())));
      chunk_pos = 0;
      if (chunk_len == 0) break;
    }
    const char* begin = chunk.data() + chunk_pos;
    const std::size_t n = chunk_len - chunk_pos;
    const void* nl = std::memchr(begin, '\n', n);
    const std::size_t take = nl ? static_cast<std::size_t>(static_cast<const char*>(nl) - begin) + 1 : n;
    line.append(begin, nl ? take - 1 : take);
    chunk_pos += take;
    offset += take;
    if (line.size() > options.max_record_bytes) {
      throw DecodeError(ErrorCode::malformed_record,
                        "line " + std::to_string(line_number + 1) +
                            ": record exceeds the maximum record size",
                        line_start, line_number + 1);
    }
    if (nl) {
      line_terminated = true;
      break;
    }
  }
  if (!line_terminated && line.empty()) return false;
  ++line_number;
  return true;
}

std::optional<Record> RecordReader::Impl::next_ndjson() {
  if (!read_line()) return std::nullopt;
  auto where = [&] {
    return "line " + std::to_string(line_number) + " at byte " + std::to_string(line_start) + ": ";
  };
  if (!line_terminated) {
    throw DecodeError(ErrorCode::truncated,
                      where() + "stream ends inside a record (no line terminator)",
                      line_start, line_number);
  }
  nlohmann::json tree;
  try {
    tree = nlohmann::json::parse(line.begin(), line.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError(ErrorCode::malformed_record,
                      where() + "invalid JSON at byte " +
                          std::to_string(line_start + (e.byte > 0 ? e.byte - 1 : 0)),
                      line_start, line_number);
  }
  try {
    return detail::record_from_tree(tree, options);
  } catch (const detail::TreeError& e) {
    throw DecodeError(e.code, where() + e.message, line_start, line_number);
  }
}

std::optional<Record> RecordReader::Impl::next_binary() {
  nlohmann::json tree;
  try {
    if (msgpack.next(tree) == detail::MsgpackReader::Status::end) return std::nullopt;
  } catch (const detail::MsgpackReader::Failure& f) {
    const auto code = f.kind == detail::MsgpackReader::Failure::Kind::truncated
                          ? ErrorCode::truncated
                          : ErrorCode::malformed_record;
    throw DecodeError(code,
                      "record " + std::to_string(count + 1) + " at byte " +
                          std::to_string(msgpack.value_offset()) + ": " + f.message,
                      msgpack.value_offset());
  }
  try {
    return detail::record_from_tree(tree, options);
  } catch (const detail::TreeError& e) {
    throw DecodeError(e.code,
                      "record " + std::to_string(count + 1) + " at byte " +
                          std::to_string(msgpack.value_offset()) + ": " + e.message,
                      msgpack.value_offset());
  }
}

RecordReader::RecordReader(std::istream& in, Encoding encoding, DecodeOptions options)
    : impl_(std::make_unique<Impl>(in, encoding, options)) {}

RecordReader::~RecordReader() = default;
RecordReader::RecordReader(RecordReader&&) noexcept = default;
RecordReader& RecordReader::operator=(RecordReader&&) noexcept = default;

std::optional<Record> RecordReader::next() {
  if (impl_->done) return std::nullopt;
  try {
    auto r = impl_->encoding == Encoding::ndjson ? impl_->next_ndjson() : impl_->next_binary();
    if (r) {
      ++impl_->count;
    } else {
      impl_->done = true;
    }
    return r;
  } catch (...) {
    impl_->done = true;
    throw;
  }
}

Encoding RecordReader::encoding() const noexcept { return impl_->encoding; }

std::size_t RecordReader::records_read() const noexcept { return impl_->count; }

namespace {

class ViewBuf : public std::streambuf {
 public:
  explicit ViewBuf(std::string_view bytes) {
    auto* p = const_cast<char*>(bytes.data());
    setg(p, p, p + bytes.size());
  }
};

}  // namespace

std::vector<Record> decode_all(std::string_view bytes, Encoding encoding,
                               const DecodeOptions& options) {
  ViewBuf buf(bytes);
  std::istream in(&buf);
  RecordReader reader(in, encoding, options);
  std::vector<Record> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------
// Writer
// ---------------------------------------------------------------------------

RecordWriter::RecordWriter(std::ostream& out, Encoding encoding, WriterOptions options)
    : out_(out), encoding_(encoding), options_(options) {}

void RecordWriter::put(std::string_view bytes) {
  out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out_) throw Error(ErrorCode::io, "write to output stream failed");
  bytes_ += bytes.size();
}

void RecordWriter::write(const Record& record) {
  auto bytes = encode_record(record, encoding_, options_.encode);
  const auto* meta = std::get_if<RecordingMetadata>(&record);
  if (records_ == 0 && meta && options_.reserve_finalization) {
    // Size the head record for its finalized form so finalize() can overwrite
    // it in place: JSON whitespace before the LF, or top-level nil padding
    // after the MessagePack value.
    RecordingMetadata probe = *meta;
    if (!probe.end_time) probe.end_time = probe.start_time;
    const auto final_size = encode_record(probe, encoding_, options_.encode).size();
    if (final_size > bytes.size()) {
      const auto pad = final_size - bytes.size();
      if (encoding_ == Encoding::ndjson) {
        bytes.insert(bytes.size() - 1, pad, ' ');
      } else {
        bytes.append(pad, static_cast<char>(detail::kMsgpackNil));
      }
    }
    reserved_head_size_ = bytes.size();
    head_position_ = out_.tellp();
    if (head_position_ < 0)
      throw Error(ErrorCode::io, "finalization requires a seekable output stream");
  }
  put(bytes);
  ++records_;
}

void RecordWriter::finalize(const RecordingMetadata& final_metadata) {
  if (!reserved_head_size_)
    throw Error(ErrorCode::invalid_argument,
                "finalize() needs reserve_finalization and a metadata head record");
  auto bytes = encode_record(final_metadata, encoding_, options_.encode);
  if (bytes.size() > *reserved_head_size_)
    throw Error(ErrorCode::invalid_argument,
                "finalized metadata no longer fits the reserved head record");
  const auto pad = *reserved_head_size_ - bytes.size();
  if (encoding_ == Encoding::ndjson) {
    bytes.insert(bytes.size() - 1, pad, ' ');
  } else {
    bytes.append(pad, static_cast<char>(detail::kMsgpackNil));
  }
  const auto end = out_.tellp();
  out_.seekp(head_position_);
  out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out_.seekp(end);
  out_.flush();
  if (!out_) throw Error(ErrorCode::io, "rewriting the metadata record failed");
}

std::size_t transcode(std::istream& in, Encoding from, std::ostream& out, Encoding to,
                      const TypeRegistry* registry) {
  RecordReader reader(in, from, DecodeOptions{registry, ExtensionPolicy::passthrough});
  RecordWriter writer(out, to,
                      WriterOptions{EncodeOptions{registry, ExtensionPolicy::passthrough}});
  while (auto r = reader.next()) writer.write(*r);
  return writer.records_written();
}

}  // namespace oxdr::codec
