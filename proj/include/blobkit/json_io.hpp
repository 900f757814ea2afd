#pragma once

#include "blobkit/attention.hpp"
#include "blobkit/fitting.hpp"
#include "blobkit/matrix.hpp"

#include "json.hpp"

namespace blobkit {

nlohmann::json to_json(const FitResult& result);

/// Array of equal-length numeric rows.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& doc, const std::string& path);

/// Input of the attention demo:
/// {"h", "w", "g": [[...]], "blobs": [{"keys", "values", "mask"}], "masked": bool}
struct AttentionBundle {
    FeatureGrid grid;
    std::vector<BlobTokens> blobs;
    bool masked = true;
};

AttentionBundle attention_bundle_from_json(const nlohmann::json& doc);

/// {"output": [[...]], "weight_sums": [...]}
nlohmann::json attention_result_to_json(const AttentionResult& result);

}  // namespace blobkit
