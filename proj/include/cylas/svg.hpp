// SPDX-License-Identifier: MIT
//
// Native SVG 1.1 emission for the tool's figure outputs: polylines in data
// coordinates, labeled axes, and level contours extracted by marching
// squares. No timestamps are written, so rerunning a command reproduces
// the file byte for byte; the generating configuration is embedded as
// document metadata.

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cylas {

using Polyline = std::vector<std::pair<double, double>>;

/// Marching-squares contour extraction on a uniform grid. `values` holds
/// nx*ny samples indexed iy*nx + ix at (x0 + ix dx, y0 + iy dy). Cell-edge
/// crossings are linearly interpolated and the resulting segments chained
/// into polylines. Saddle cells are disambiguated by the cell-center value.
[[nodiscard]] inline std::vector<Polyline> contour_lines(const std::vector<double>& values,
                                                         int nx, int ny, double x0,
                                                         double dx, double y0, double dy,
                                                         double level) {
    if (nx < 2 || ny < 2 || values.size() != static_cast<size_t>(nx) * ny)
        throw std::invalid_argument("contour_lines: bad grid");
    auto v = [&](int ix, int iy) {
        return values[static_cast<size_t>(iy) * nx + ix];
    };
    using Pt = std::pair<double, double>;
    std::vector<std::pair<Pt, Pt>> segs;

    auto interp = [level](double xa, double ya, double va, double xb, double yb,
                          double vb) -> Pt {
        const double d = vb - va;
        const double s = d == 0.0 ? 0.5 : (level - va) / d;
        return {xa + s * (xb - xa), ya + s * (yb - ya)};
    };

    for (int iy = 0; iy + 1 < ny; ++iy) {
        for (int ix = 0; ix + 1 < nx; ++ix) {
            const double xa = x0 + ix * dx, xb = xa + dx;
            const double ya = y0 + iy * dy, yb = ya + dy;
            const double v00 = v(ix, iy), v10 = v(ix + 1, iy);
            const double v01 = v(ix, iy + 1), v11 = v(ix + 1, iy + 1);
            int c = 0;
            if (v00 > level) c |= 1;
            if (v10 > level) c |= 2;
            if (v11 > level) c |= 4;
            if (v01 > level) c |= 8;
            if (c == 0 || c == 15) continue;
            const Pt bottom = interp(xa, ya, v00, xb, ya, v10);
            const Pt right = interp(xb, ya, v10, xb, yb, v11);
            const Pt top = interp(xa, yb, v01, xb, yb, v11);
            const Pt left = interp(xa, ya, v00, xa, yb, v01);
            switch (c) {
                case 1: case 14: segs.push_back({left, bottom}); break;
                case 2: case 13: segs.push_back({bottom, right}); break;
                case 3: case 12: segs.push_back({left, right}); break;
                case 4: case 11: segs.push_back({right, top}); break;
                case 6: case 9: segs.push_back({bottom, top}); break;
                case 7: case 8: segs.push_back({left, top}); break;
                case 5: case 10: {
                    const double center = 0.25 * (v00 + v10 + v01 + v11);
                    const bool joined = (center > level) == (c == 5);
                    if (joined) {
                        segs.push_back({left, c == 5 ? top : bottom});
                        segs.push_back({right, c == 5 ? bottom : top});
                    } else {
                        segs.push_back({left, c == 5 ? bottom : top});
                        segs.push_back({right, c == 5 ? top : bottom});
                    }
                    break;
                }
                default: break;
            }
        }
    }

    // Chain segments into polylines by matching quantized endpoints.
    const double qx = 1e-9 * std::fabs(dx), qy = 1e-9 * std::fabs(dy);
    auto key = [&](const Pt& p) {
        return std::pair<long long, long long>(
            static_cast<long long>(std::llround((p.first - x0) / std::max(qx, 1e-300))),
            static_cast<long long>(std::llround((p.second - y0) / std::max(qy, 1e-300))));
    };
    // A contour running through (or within rounding error of) a grid vertex
    // pinches into segments of zero length at the matching resolution. They
    // carry no geometry but would steal junction endpoints, so drop them.
    std::erase_if(segs, [&](const std::pair<Pt, Pt>& s) {
        return key(s.first) == key(s.second);
    });
    std::multimap<std::pair<long long, long long>, size_t> ends;
    for (size_t s = 0; s < segs.size(); ++s) {
        ends.insert({key(segs[s].first), s});
        ends.insert({key(segs[s].second), s});
    }
    std::vector<bool> used(segs.size(), false);
    std::vector<Polyline> out;
    for (size_t s = 0; s < segs.size(); ++s) {
        if (used[s]) continue;
        used[s] = true;
        Polyline line{segs[s].first, segs[s].second};
        for (int dir = 0; dir < 2; ++dir) {
            for (;;) {
                const Pt& tip = dir == 0 ? line.back() : line.front();
                size_t next = segs.size();
                auto range = ends.equal_range(key(tip));
                for (auto it = range.first; it != range.second; ++it)
                    if (!used[it->second]) {
                        next = it->second;
                        break;
                    }
                if (next == segs.size()) break;
                used[next] = true;
                const bool tail_matches = key(segs[next].first) == key(tip);
                const Pt add = tail_matches ? segs[next].second : segs[next].first;
                if (dir == 0) line.push_back(add);
                else line.insert(line.begin(), add);
            }
        }
        out.push_back(std::move(line));
    }
    return out;
}

/// Small SVG canvas with a data-to-pixel viewport, axis frame, polylines,
/// markers, and text. Coordinates are formatted with fixed precision so a
/// rerun writes identical bytes.
class SvgPlot {
  public:
    SvgPlot(int width_px, int height_px)
        : w_(width_px), h_(height_px) {}

    void set_view(double x0, double x1, double y0, double y1) {
        if (!(x1 > x0) || !(y1 > y0))
            throw std::invalid_argument("SvgPlot: degenerate view box");
        vx0_ = x0; vx1_ = x1; vy0_ = y0; vy1_ = y1;
    }

    /// Embedded in the document <desc>; carries the generating config.
    void set_description(const std::string& text) { desc_ = escape(text); }

    void add_axes(const std::string& x_label, const std::string& y_label) {
        body_ << "<rect x=\"" << px(vx0_) << "\" y=\"" << py(vy1_) << "\" width=\""
              << fmt(pw()) << "\" height=\"" << fmt(ph())
              << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
        body_ << "<text x=\"" << fmt(margin_ + 0.5 * pw()) << "\" y=\""
              << fmt(h_ - 8.0) << "\" font-size=\"12\" text-anchor=\"middle\">"
              << escape(x_label) << "</text>\n";
        body_ << "<text x=\"14\" y=\"" << fmt(margin_ + 0.5 * ph())
              << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
              << fmt(margin_ + 0.5 * ph()) << ")\">" << escape(y_label) << "</text>\n";
        // Corner coordinates, enough to read values off the frame.
        body_ << "<text x=\"" << px(vx0_) << "\" y=\"" << fmt(h_ - margin_ + 14.0)
              << "\" font-size=\"10\">" << fmt_g(vx0_) << "</text>\n";
        body_ << "<text x=\"" << px(vx1_) << "\" y=\"" << fmt(h_ - margin_ + 14.0)
              << "\" font-size=\"10\" text-anchor=\"end\">" << fmt_g(vx1_) << "</text>\n";
        body_ << "<text x=\"" << fmt(margin_ - 4.0) << "\" y=\"" << py(vy0_)
              << "\" font-size=\"10\" text-anchor=\"end\">" << fmt_g(vy0_) << "</text>\n";
        body_ << "<text x=\"" << fmt(margin_ - 4.0) << "\" y=\"" << py(vy1_)
              << "\" font-size=\"10\" text-anchor=\"end\">" << fmt_g(vy1_) << "</text>\n";
    }

    void add_polyline(const Polyline& pts, const std::string& color,
                      double stroke_width = 1.5, bool dashed = false) {
        if (pts.size() < 2) return;
        body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
              << fmt(stroke_width) << "\"";
        if (dashed) body_ << " stroke-dasharray=\"6 4\"";
        body_ << " points=\"";
        for (size_t i = 0; i < pts.size(); ++i)
            body_ << (i ? " " : "") << px(pts[i].first) << "," << py(pts[i].second);
        body_ << "\"/>\n";
    }

    void add_marker(double x, double y, const std::string& color, double r_px = 3.0) {
        body_ << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\""
              << fmt(r_px) << "\" fill=\"" << color << "\"/>\n";
    }

    void add_label(double x, double y, const std::string& text,
                   const std::string& color = "#222222") {
        body_ << "<text x=\"" << px(x) << "\" y=\"" << py(y)
              << "\" font-size=\"11\" fill=\"" << color << "\">" << escape(text)
              << "</text>\n";
    }

    void write(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("svg: cannot open '" + path + "'");
        os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << w_
           << "\" height=\"" << h_ << "\" viewBox=\"0 0 " << w_ << " " << h_ << "\">\n";
        if (!desc_.empty()) os << "<desc>" << desc_ << "</desc>\n";
        os << "<rect width=\"" << w_ << "\" height=\"" << h_ << "\" fill=\"white\"/>\n"
           << body_.str() << "</svg>\n";
        if (!os) throw std::runtime_error("svg: write to '" + path + "' failed");
    }

  private:
    [[nodiscard]] double pw() const { return w_ - 2.0 * margin_; }
    [[nodiscard]] double ph() const { return h_ - 2.0 * margin_; }
    [[nodiscard]] std::string px(double x) const {
        return fmt(margin_ + (x - vx0_) / (vx1_ - vx0_) * pw());
    }
    [[nodiscard]] std::string py(double y) const {
        return fmt(margin_ + (vy1_ - y) / (vy1_ - vy0_) * ph());
    }
    [[nodiscard]] static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return buf;
    }
    [[nodiscard]] static std::string fmt_g(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return buf;
    }
    [[nodiscard]] static std::string escape(const std::string& s) {
        std::string out;
        for (char ch : s) {
            switch (ch) {
                case '&': out += "&amp;"; break;
                case '<': out += "&lt;"; break;
                case '>': out += "&gt;"; break;
                default: out += ch;
            }
        }
        return out;
    }

    int w_, h_;
    double margin_ = 48.0;
    double vx0_ = 0.0, vx1_ = 1.0, vy0_ = 0.0, vy1_ = 1.0;
    std::string desc_;
    std::ostringstream body_;
};

} // namespace cylas
