#pragma once
// Column-typed feature storage. One-hot / boolean columns are kept as bytes,
// continuous columns as float32; the forest exploits the distinction when
// searching splits but the split semantics are identical either way.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace rebrowse {

class FeatureMatrix {
  public:
    FeatureMatrix() = default;

    // binary_mask[c] marks columns that only ever hold 0 or 1.
    FeatureMatrix(int width, std::vector<bool> binary_mask)
        : width_(width), binary_(std::move(binary_mask)) {
        if (static_cast<int>(binary_.size()) != width)
            throw std::invalid_argument("binary mask width mismatch");
        slot_.resize(static_cast<size_t>(width));
        int num_slots = 0, bin_slots = 0;
        for (int c = 0; c < width; ++c)
            slot_[static_cast<size_t>(c)] = binary_[static_cast<size_t>(c)] ? bin_slots++ : num_slots++;
        num_cols_.resize(static_cast<size_t>(num_slots));
        bin_cols_.resize(static_cast<size_t>(bin_slots));
    }

    // Detects binary columns from the data; convenience for tests and small
    // callers. Values must be finite.
    static FeatureMatrix from_rows(const std::vector<std::vector<float>>& rows) {
        if (rows.empty()) return FeatureMatrix(0, {});
        int width = static_cast<int>(rows.front().size());
        std::vector<bool> mask(static_cast<size_t>(width), true);
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != width)
                throw std::invalid_argument("ragged feature rows");
            for (int c = 0; c < width; ++c)
                if (row[static_cast<size_t>(c)] != 0.0f && row[static_cast<size_t>(c)] != 1.0f)
                    mask[static_cast<size_t>(c)] = false;
        }
        FeatureMatrix m(width, std::move(mask));
        for (const auto& row : rows) m.append_row(row);
        return m;
    }

    int width() const { return width_; }
    int64_t row_count() const { return rows_; }
    bool is_binary(int col) const { return binary_[static_cast<size_t>(col)]; }

    void reserve(int64_t n) {
        for (auto& c : num_cols_) c.reserve(static_cast<size_t>(n));
        for (auto& c : bin_cols_) c.reserve(static_cast<size_t>(n));
    }

    void append_row(std::span<const float> row) {
        if (static_cast<int>(row.size()) != width_)
            throw std::invalid_argument("feature row width mismatch");
        for (int c = 0; c < width_; ++c) {
            float v = row[static_cast<size_t>(c)];
            if (binary_[static_cast<size_t>(c)]) {
                if (v != 0.0f && v != 1.0f)
                    throw std::invalid_argument("non-binary value in binary column");
                bin_cols_[static_cast<size_t>(slot_[static_cast<size_t>(c)])]
                    .push_back(static_cast<uint8_t>(v));
            } else {
                num_cols_[static_cast<size_t>(slot_[static_cast<size_t>(c)])].push_back(v);
            }
        }
        ++rows_;
    }

    float value(int64_t row, int col) const {
        size_t slot = static_cast<size_t>(slot_[static_cast<size_t>(col)]);
        return binary_[static_cast<size_t>(col)]
                   ? static_cast<float>(bin_cols_[slot][static_cast<size_t>(row)])
                   : num_cols_[slot][static_cast<size_t>(row)];
    }

    // Fast typed access for the forest's split search.
    const std::vector<uint8_t>& binary_column(int col) const {
        return bin_cols_[static_cast<size_t>(slot_[static_cast<size_t>(col)])];
    }
    const std::vector<float>& numeric_column(int col) const {
        return num_cols_[static_cast<size_t>(slot_[static_cast<size_t>(col)])];
    }

    std::vector<float> row(int64_t r) const {
        std::vector<float> out(static_cast<size_t>(width_));
        for (int c = 0; c < width_; ++c) out[static_cast<size_t>(c)] = value(r, c);
        return out;
    }

  private:
    int width_ = 0;
    int64_t rows_ = 0;
    std::vector<bool> binary_;
    std::vector<int32_t> slot_;
    std::vector<std::vector<float>> num_cols_;
    std::vector<std::vector<uint8_t>> bin_cols_;
};

}  // namespace rebrowse
