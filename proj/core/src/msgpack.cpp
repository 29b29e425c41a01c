#include "msgpack.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <limits>

namespace oxdr::detail {
namespace {

constexpr int kMaxDepth = 64;

[[noreturn]] void fail_truncated() {
  throw MsgpackReader::Failure{MsgpackReader::Failure::Kind::truncated,
                               "stream ends inside a record"};
}

[[noreturn]] void fail_malformed(std::string msg) {
  throw MsgpackReader::Failure{MsgpackReader::Failure::Kind::malformed, std::move(msg)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Writer
// ---------------------------------------------------------------------------

void MsgpackWriter::be16(std::uint16_t v) {
  byte(static_cast<std::uint8_t>(v >> 8));
  byte(static_cast<std::uint8_t>(v));
}

void MsgpackWriter::be32(std::uint32_t v) {
  be16(static_cast<std::uint16_t>(v >> 16));
  be16(static_cast<std::uint16_t>(v));
}

void MsgpackWriter::be64(std::uint64_t v) {
  be32(static_cast<std::uint32_t>(v >> 32));
  be32(static_cast<std::uint32_t>(v));
}

void MsgpackWriter::begin_map(std::size_t n) {
  if (n < 16) {
    byte(static_cast<std::uint8_t>(0x80 | n));
  } else if (n <= 0xffff) {
    byte(0xde);
    be16(static_cast<std::uint16_t>(n));
  } else {
    byte(0xdf);
    be32(static_cast<std::uint32_t>(n));
  }
}

void MsgpackWriter::begin_array(std::size_t n) {
  if (n < 16) {
    byte(static_cast<std::uint8_t>(0x90 | n));
  } else if (n <= 0xffff) {
    byte(0xdc);
    be16(static_cast<std::uint16_t>(n));
  } else {
    byte(0xdd);
    be32(static_cast<std::uint32_t>(n));
  }
}

void MsgpackWriter::null() { byte(kMsgpackNil); }

void MsgpackWriter::boolean(bool v) { byte(v ? 0xc3 : 0xc2); }

void MsgpackWriter::integer(std::int64_t v) {
  if (v >= 0) {
    const auto u = static_cast<std::uint64_t>(v);
    if (u < 128) {
      byte(static_cast<std::uint8_t>(u));
    } else if (u <= 0xff) {
      byte(0xcc);
      byte(static_cast<std::uint8_t>(u));
    } else if (u <= 0xffff) {
      byte(0xcd);
      be16(static_cast<std::uint16_t>(u));
    } else if (u <= 0xffffffff) {
      byte(0xce);
      be32(static_cast<std::uint32_t>(u));
    } else {
      byte(0xcf);
      be64(u);
    }
  } else if (v >= -32) {
    byte(static_cast<std::uint8_t>(static_cast<std::int8_t>(v)));
  } else if (v >= std::numeric_limits<std::int8_t>::min()) {
    byte(0xd0);
    byte(static_cast<std::uint8_t>(static_cast<std::int8_t>(v)));
  } else if (v >= std::numeric_limits<std::int16_t>::min()) {
    byte(0xd1);
    be16(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  } else if (v >= std::numeric_limits<std::int32_t>::min()) {
    byte(0xd2);
    be32(static_cast<std::uint32_t>(static_cast<std::int32_t>(v)));
  } else {
    byte(0xd3);
    be64(static_cast<std::uint64_t>(v));
  }
}

void MsgpackWriter::real(double v) {
  byte(0xcb);
  be64(std::bit_cast<std::uint64_t>(v));
}

void MsgpackWriter::string(std::string_view v) {
  const auto n = v.size();
  if (n < 32) {
    byte(static_cast<std::uint8_t>(0xa0 | n));
  } else if (n <= 0xff) {
    byte(0xd9);
    byte(static_cast<std::uint8_t>(n));
  } else if (n <= 0xffff) {
    byte(0xda);
    be16(static_cast<std::uint16_t>(n));
  } else {
    byte(0xdb);
    be32(static_cast<std::uint32_t>(n));
  }
  out_.append(v);
}

void MsgpackWriter::bytes(std::span<const std::byte> v) {
  const auto n = v.size();
  if (n <= 0xff) {
    byte(0xc4);
    byte(static_cast<std::uint8_t>(n));
  } else if (n <= 0xffff) {
    byte(0xc5);
    be16(static_cast<std::uint16_t>(n));
  } else {
    byte(0xc6);
    be32(static_cast<std::uint32_t>(n));
  }
  out_.append(reinterpret_cast<const char*>(v.data()), n);
}

// ---------------------------------------------------------------------------
// Reader
// ---------------------------------------------------------------------------

void MsgpackReader::charge(std::uint64_t n) {
  if (n > budget_) fail_malformed("record exceeds the maximum record size");
  budget_ -= static_cast<std::size_t>(n);
}

std::uint8_t MsgpackReader::take() {
  const auto c = in_.sbumpc();
  if (c == std::streambuf::traits_type::eof()) fail_truncated();
  ++offset_;
  return static_cast<std::uint8_t>(c);
}

std::uint64_t MsgpackReader::take_be(int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | take();
  return v;
}

std::string MsgpackReader::take_string(std::size_t n) {
  charge(n);
  std::string s(n, '\0');
  const auto got = in_.sgetn(s.data(), static_cast<std::streamsize>(n));
  offset_ += static_cast<std::uint64_t>(got);
  if (static_cast<std::size_t>(got) != n) fail_truncated();
  return s;
}

MsgpackReader::Status MsgpackReader::next(nlohmann::json& out) {
  for (;;) {
    const auto c = in_.sgetc();
    if (c == std::streambuf::traits_type::eof()) return Status::end;
    if (static_cast<std::uint8_t>(c) != kMsgpackNil) break;
    in_.sbumpc();
    ++offset_;
  }
  value_offset_ = offset_;
  budget_ = max_bytes_;
  out = read_value(0);
  return Status::value;
}

nlohmann::json MsgpackReader::read_value(int depth) {
  if (depth > kMaxDepth) fail_malformed("nesting too deep");
  charge(1);
  const std::uint8_t b = take();

  auto read_array = [&](std::uint64_t n) {
    charge(n);  // every element costs at least one byte
    nlohmann::json arr = nlohmann::json::array();
    for (std::uint64_t i = 0; i < n; ++i) arr.push_back(read_value(depth + 1));
    return arr;
  };
  auto read_map = [&](std::uint64_t n) {
    charge(2 * n);
    nlohmann::json obj = nlohmann::json::object();
    for (std::uint64_t i = 0; i < n; ++i) {
      nlohmann::json k = read_value(depth + 1);
      if (!k.is_string()) fail_malformed("map key is not a string");
      auto key = k.get<std::string>();
      if (obj.contains(key)) fail_malformed("duplicate map key '" + key + "'");
      obj[key] = read_value(depth + 1);
    }
    return obj;
  };
  auto read_bin = [&](std::uint64_t n) {
    auto s = take_string(static_cast<std::size_t>(n));
    return nlohmann::json::binary(std::vector<std::uint8_t>(s.begin(), s.end()));
  };

  if (b <= 0x7f) return nlohmann::json(static_cast<std::uint64_t>(b));
  if (b >= 0xe0) return nlohmann::json(static_cast<std::int64_t>(static_cast<std::int8_t>(b)));
  if ((b & 0xf0) == 0x80) return read_map(b & 0x0f);
  if ((b & 0xf0) == 0x90) return read_array(b & 0x0f);
  if ((b & 0xe0) == 0xa0) return nlohmann::json(take_string(b & 0x1f));

  switch (b) {
    case 0xc0: return nlohmann::json(nullptr);
    case 0xc2: return nlohmann::json(false);
    case 0xc3: return nlohmann::json(true);
    case 0xc4: return read_bin(take_be(1));
    case 0xc5: return read_bin(take_be(2));
    case 0xc6: return read_bin(take_be(4));
    case 0xca: {
      const auto bits = static_cast<std::uint32_t>(take_be(4));
      return nlohmann::json(static_cast<double>(std::bit_cast<float>(bits)));
    }
    case 0xcb: return nlohmann::json(std::bit_cast<double>(take_be(8)));
    case 0xcc: return nlohmann::json(take_be(1));
    case 0xcd: return nlohmann::json(take_be(2));
    case 0xce: return nlohmann::json(take_be(4));
    case 0xcf: return nlohmann::json(take_be(8));
    case 0xd0: return nlohmann::json(static_cast<std::int64_t>(static_cast<std::int8_t>(take_be(1))));
    case 0xd1: return nlohmann::json(static_cast<std::int64_t>(static_cast<std::int16_t>(take_be(2))));
    case 0xd2: return nlohmann::json(static_cast<std::int64_t>(static_cast<std::int32_t>(take_be(4))));
    case 0xd3: return nlohmann::json(static_cast<std::int64_t>(take_be(8)));
    case 0xd9: return nlohmann::json(take_string(take_be(1)));
    case 0xda: return nlohmann::json(take_string(take_be(2)));
    case 0xdb: return nlohmann::json(take_string(take_be(4)));
    case 0xdc: return read_array(take_be(2));
    case 0xdd: return read_array(take_be(4));
    case 0xde: return read_map(take_be(2));
    case 0xdf: return read_map(take_be(4));
    default: break;
  }
  char hex[8];
  std::snprintf(hex, sizeof hex, "0x%02x", b);
  fail_malformed(std::string("unsupported MessagePack type byte ") + hex);
}

}  // namespace oxdr::detail
