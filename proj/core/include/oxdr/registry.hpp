#pragma once

#include <any>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oxdr/model.hpp"

namespace oxdr {

/// Encode/decode pair for a custom value type. `encode` turns the user's value
/// into the opaque payload stored in the file; `decode` parses a payload back
/// and throws if it is malformed.
struct ValueCodecHooks {
  std::function<std::vector<std::byte>(const std::any&)> encode;
  std::function<std::any(std::span<const std::byte>)> decode;
};

class TypeRegistry;

/// Returned by TypeRegistry::register_value_type. Holding a handle is the only
/// way to build Extension values through the registered hooks.
class TypeHandle {
 public:
  const std::string& name() const noexcept { return name_; }

  Extension make(const std::any& value) const;
  std::any read(const Extension& ext) const;

 private:
  friend class TypeRegistry;
  TypeHandle(std::string name, std::shared_ptr<const ValueCodecHooks> hooks)
      : name_(std::move(name)), hooks_(std::move(hooks)) {}

  std::string name_;
  std::shared_ptr<const ValueCodecHooks> hooks_;
};

/// Name -> hooks table for Extension values.
///
/// Reads (contains, decode) may run concurrently; registration takes an
/// exclusive lock but callers are still expected to register up front from a
/// single thread.
class TypeRegistry {
 public:
  TypeRegistry() = default;
  TypeRegistry(const TypeRegistry&) = delete;
  TypeRegistry& operator=(const TypeRegistry&) = delete;

  /// Throws Error(reserved_name) for built-in tags and Error(duplicate_name)
  /// if the name is already taken.
  TypeHandle register_value_type(std::string type_name, ValueCodecHooks hooks);

  bool contains(std::string_view type_name) const;

  /// Runs the registered decode hook over the payload. Throws
  /// Error(unknown_type) naming the type if unknown.
  std::any decode(const Extension& ext) const;

  std::vector<std::string> names() const;

  /// Process-wide default used when no registry is passed explicitly.
  static TypeRegistry& global();

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const ValueCodecHooks>, std::less<>> types_;
};

}  // namespace oxdr
