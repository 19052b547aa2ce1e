#include "hystop/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hystop/error.hpp"

namespace hystop {

namespace {

std::string fmt(double v) {
    char buf[32];
    snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace

std::string svg_xy_plot(const std::vector<SvgSeries>& series, const std::string& title,
                        const std::string& x_label, const std::string& y_label, int width,
                        int height) {
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool any = false;
    for (const SvgSeries& s : series) {
        if (s.x.size() != s.y.size())
            raise(ErrorKind::Input, "svg_xy_plot: series x/y lengths differ");
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!any) {
                x_min = x_max = s.x[i];
                y_min = y_max = s.y[i];
                any = true;
            }
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.y[i]);
            y_max = std::max(y_max, s.y[i]);
        }
    }
    if (x_max - x_min < 1e-300) x_max = x_min + 1.0;
    if (y_max - y_min < 1e-300) y_max = y_min + 1.0;
    const double pad_x = 0.05 * (x_max - x_min);
    const double pad_y = 0.05 * (y_max - y_min);
    x_min -= pad_x; x_max += pad_x;
    y_min -= pad_y; y_max += pad_y;

    const int ml = 70, mr = 20, mt = 40, mb = 50; // margins
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
    auto py = [&](double y) { return mt + ph - (y - y_min) / (y_max - y_min) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << title << "</text>\n";

    // frame and tick labels
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << fmt(pw) << "\" height=\""
       << fmt(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x_min + (x_max - x_min) * i / 4;
        const double fy = y_min + (y_max - y_min) * i / 4;
        os << "<text x=\"" << fmt(px(fx)) << "\" y=\"" << height - mb + 18
           << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(fx) << "</text>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << fmt(py(fy) + 4)
           << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(fy) << "</text>\n";
        os << "<line x1=\"" << fmt(px(fx)) << "\" y1=\"" << mt + ph << "\" x2=\"" << fmt(px(fx))
           << "\" y2=\"" << fmt(mt + ph + 4) << "\" stroke=\"#444\"/>\n";
    }
    os << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\""
       << " transform=\"rotate(-90 16 " << mt + ph / 2 << ")\">" << y_label << "</text>\n";

    int legend_y = mt + 16;
    for (const SvgSeries& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.4\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (i) os << ' ';
            os << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i]));
        }
        os << "\"/>\n";
        if (!s.label.empty()) {
            os << "<line x1=\"" << ml + 10 << "\" y1=\"" << legend_y << "\" x2=\"" << ml + 34
               << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
            os << "<text x=\"" << ml + 40 << "\" y=\"" << legend_y + 4 << "\" font-size=\"12\">"
               << s.label << "</text>\n";
            legend_y += 18;
        }
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace hystop
