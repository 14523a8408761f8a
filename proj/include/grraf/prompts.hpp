#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "grraf/executor.hpp"

namespace grraf {

/// Named text templates, one per pipeline stage. Placeholders are written
/// {{name}}; unknown names are left untouched so code samples with braces
/// survive substitution.
///
/// Stage placeholders:
///   refine          {{question}}
///   code_template   {{refined}} {{language}}
///   final_code      {{refined}} {{template}} {{schema}} {{graph}} {{language}}
///   repair_error    {{refined}} {{schema}} {{graph}} {{language}} {{code}} {{error}}
///   repair_timeout  {{refined}} {{schema}} {{graph}} {{language}} {{code}} {{time_limit}}
///   fallback        {{question}} {{schema}}
///   naturalize      {{question}} {{answer}}
struct PromptTemplates {
    std::string system;
    std::string refine;
    std::string code_template;
    std::string final_code;
    std::string repair_error;
    std::string repair_timeout;
    std::string fallback;
    std::string naturalize;
    /// Describes the target language; substituted for {{language}}.
    std::string language;

    /// Shipped wording, with the language section matching the backend.
    static PromptTemplates defaults(Backend backend = Backend::embedded);

    /// Fields present in `j` override `base`. Throws ConfigurationError on
    /// unknown keys or non-string values.
    static PromptTemplates from_json(const nlohmann::json& j, const PromptTemplates& base);
    static PromptTemplates load(const std::filesystem::path& path, const PromptTemplates& base);

    nlohmann::json to_json() const;

    /// Stable 16-hex-digit FNV-1a hash over every template.
    std::string fingerprint() const;

    friend bool operator==(const PromptTemplates&, const PromptTemplates&) = default;
};

std::string render_template(std::string_view text, const std::map<std::string, std::string>& values);

}  // namespace grraf
