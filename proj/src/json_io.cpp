#include "blobkit/json_io.hpp"

#include "blobkit/errors.hpp"
#include "blobkit/layout_text.hpp"

namespace blobkit {

using nlohmann::json;

json to_json(const FitResult& result) {
    return {{"parameter", parameter_to_json(result.parameter)},
            {"iou", result.iou},
            {"initial_iou", result.initial_iou},
            {"iterations_used", result.iterations_used}};
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        rows.push_back(json(std::vector<double>(row.begin(), row.end())));
    }
    return rows;
}

Matrix matrix_from_json(const json& doc, const std::string& path) {
    if (!doc.is_array() || doc.empty()) {
        throw ParseError("expected non-empty array of rows at " + path, {}, path);
    }
    const std::size_t rows = doc.size();
    const std::size_t cols = doc[0].is_array() ? doc[0].size() : 0;
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string row_path = path + "[" + std::to_string(r) + "]";
        if (!doc[r].is_array() || doc[r].size() != cols) {
            throw ParseError("ragged or non-array row at " + row_path, {}, row_path);
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (!doc[r][c].is_number()) {
                throw ParseError("expected number at " + row_path + "[" + std::to_string(c) + "]", {},
                                 row_path);
            }
            m(r, c) = doc[r][c].get<double>();
        }
    }
    return m;
}

AttentionBundle attention_bundle_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("attention bundle must be a JSON object");
    for (const char* key : {"h", "w", "g", "blobs"}) {
        if (!doc.contains(key)) throw ParseError(std::string("missing field: ") + key, {}, key);
    }
    if (!doc["h"].is_number_unsigned() || !doc["w"].is_number_unsigned()) {
        throw ParseError("h and w must be non-negative integers");
    }
    AttentionBundle bundle;
    bundle.grid.h = doc["h"].get<std::size_t>();
    bundle.grid.w = doc["w"].get<std::size_t>();
    bundle.grid.values = matrix_from_json(doc["g"], "g");
    if (doc.contains("masked")) {
        if (!doc["masked"].is_boolean()) throw ParseError("masked must be a boolean", {}, "masked");
        bundle.masked = doc["masked"].get<bool>();
    }
    const json& blobs = doc["blobs"];
    if (!blobs.is_array()) throw ParseError("blobs must be an array", {}, "blobs");
    for (std::size_t i = 0; i < blobs.size(); ++i) {
        const std::string path = "blobs[" + std::to_string(i) + "]";
        const json& b = blobs[i];
        if (!b.is_object() || !b.contains("keys") || !b.contains("values")) {
            throw ParseError("blob needs keys and values at " + path, {}, path);
        }
        BlobTokens tokens;
        tokens.keys = matrix_from_json(b["keys"], path + ".keys");
        tokens.values = matrix_from_json(b["values"], path + ".values");
        if (b.contains("mask")) {
            const json& mask = b["mask"];
            if (!mask.is_array()) throw ParseError("mask must be an array at " + path, {}, path + ".mask");
            for (const json& bit : mask) {
                if (!bit.is_number_integer() && !bit.is_boolean()) {
                    throw ParseError("mask entries must be 0/1 at " + path, {}, path + ".mask");
                }
                tokens.mask.push_back(bit.is_boolean() ? (bit.get<bool>() ? 1 : 0)
                                                       : (bit.get<long long>() != 0 ? 1 : 0));
            }
        } else {
            tokens.mask.assign(bundle.grid.h * bundle.grid.w, 1);
        }
        bundle.blobs.push_back(std::move(tokens));
    }
    return bundle;
}

json attention_result_to_json(const AttentionResult& result) {
    json sums = json::array();
    for (std::size_t r = 0; r < result.weights.rows(); ++r) {
        double s = 0.0;
        for (double w : result.weights.row(r)) s += w;
        sums.push_back(s);
    }
    return {{"output", matrix_to_json(result.output)}, {"weight_sums", sums}};
}

}  // namespace blobkit
