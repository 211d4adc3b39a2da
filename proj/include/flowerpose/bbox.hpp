#pragma once

namespace flowerpose {

// Pixel rectangle with inclusive bounds; x is the column, y the row.
struct BBox2D {
    int x_min = 0;
    int x_max = 0;
    int y_min = 0;
    int y_max = 0;
    double score = 1.0;

    int width() const { return x_max - x_min + 1; }
    int height() const { return y_max - y_min + 1; }
    long long area() const { return static_cast<long long>(width()) * height(); }

    friend bool operator==(const BBox2D&, const BBox2D&) = default;
};

} // namespace flowerpose
