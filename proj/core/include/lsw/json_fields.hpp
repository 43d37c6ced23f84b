#pragma once

#include <algorithm>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace lsw {

/// Rejects keys of `j` outside `allowed`. `where` names the block in errors.
inline void check_fields(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
    if (!j.is_object()) throw std::invalid_argument(std::string(where) + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw std::invalid_argument("unknown field '" + key + "' in " + std::string(where));
    }
}

/// Reads j[key] into `out` when present.
template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

}  // namespace lsw
