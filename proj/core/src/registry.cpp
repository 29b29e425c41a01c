#include "oxdr/registry.hpp"

#include <mutex>

#include "oxdr/error.hpp"

namespace oxdr {

Extension TypeHandle::make(const std::any& value) const {
  return Extension{name_, hooks_->encode(value)};
}

std::any TypeHandle::read(const Extension& ext) const {
  if (ext.type_name != name_) {
    throw Error(ErrorCode::invalid_argument,
                "extension '" + ext.type_name + "' read through handle for '" + name_ + "'");
  }
  return hooks_->decode(ext.payload);
}

TypeHandle TypeRegistry::register_value_type(std::string type_name, ValueCodecHooks hooks) {
  if (type_name.empty())
    throw Error(ErrorCode::invalid_argument, "extension type name is empty");
  if (is_builtin_tag(type_name))
    throw Error(ErrorCode::reserved_name, "'" + type_name + "' is a built-in value type");
  if (!hooks.encode || !hooks.decode)
    throw Error(ErrorCode::invalid_argument,
                "extension '" + type_name + "' needs both encode and decode hooks");

  auto shared = std::make_shared<const ValueCodecHooks>(std::move(hooks));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = types_.emplace(type_name, shared);
  if (!inserted)
    throw Error(ErrorCode::duplicate_name, "'" + type_name + "' is already registered");
  return TypeHandle(std::move(type_name), std::move(shared));
}

bool TypeRegistry::contains(std::string_view type_name) const {
  std::shared_lock lock(mutex_);
  return types_.find(type_name) != types_.end();
}

std::any TypeRegistry::decode(const Extension& ext) const {
  std::shared_ptr<const ValueCodecHooks> hooks;
  {
    std::shared_lock lock(mutex_);
    auto it = types_.find(ext.type_name);
    if (it == types_.end())
      throw Error(ErrorCode::unknown_type, "unknown value type '" + ext.type_name + "'");
    hooks = it->second;
  }
  return hooks->decode(ext.payload);
}

std::vector<std::string> TypeRegistry::names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  out.reserve(types_.size());
  for (const auto& [name, _] : types_) out.push_back(name);
  return out;
}

TypeRegistry& TypeRegistry::global() {
  static TypeRegistry registry;
  return registry;
}

}  // namespace oxdr
