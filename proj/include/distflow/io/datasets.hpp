#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "distflow/embedded_data.hpp"
#include "distflow/error.hpp"
#include "distflow/io/network_file.hpp"

namespace distflow::io {

[[nodiscard]] inline std::vector<std::string> dataset_names() {
    std::vector<std::string> names;
    for (const auto& [name, text] : embedded::datasets) names.emplace_back(name);
    return names;
}

[[nodiscard]] inline std::string_view dataset_text(std::string_view name) {
    for (const auto& [key, text] : embedded::datasets) {
        if (key == name) return text;
    }
    throw Error(Errc::UnknownDataset, std::string(name));
}

/// The bundled feeder transcription with the given name ("sce47" or "sce56").
[[nodiscard]] inline LoadedNetwork embedded_dataset(std::string_view name, const LoadOptions& options = {}) {
    auto net = parse_network_text(dataset_text(name), options);
    if (net.name.empty()) net.name = std::string(name);
    return net;
}

}  // namespace distflow::io
