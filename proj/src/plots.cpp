#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nfde/experiments.hpp"

namespace nfde {

namespace fs = std::filesystem;

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                         "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

struct Curve {
  std::string label;
  std::vector<std::pair<double, double>> pts;  // data coordinates
  bool dashed = false;
  bool markers = false;
  std::string color;
};

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else if (c == '"') o += "&quot;";
    else o += c;
  }
  return o;
}

// Log-log plot with decade ticks.
std::string svg_loglog(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Curve>& curves) {
  const double W = 720, H = 460, L = 80, R = 220, T = 40, B = 60;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& c : curves)
    for (auto [x, y] : c.pts)
      if (x > 0 && y > 0 && std::isfinite(x) && std::isfinite(y)) {
        x0 = std::min(x0, std::log10(x));
        x1 = std::max(x1, std::log10(x));
        y0 = std::min(y0, std::log10(y));
        y1 = std::max(y1, std::log10(y));
      }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  x0 = std::floor(x0), x1 = std::max(std::ceil(x1), x0 + 1);
  y0 = std::floor(y0), y1 = std::max(std::ceil(y1), y0 + 1);
  auto px = [&](double x) { return L + (std::log10(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (std::log10(y) - y0) / (y1 - y0) * (H - T - B); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(title) << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = int(x0); e <= int(x1); ++e) {
    const double x = px(std::pow(10.0, e));
    os << "<line x1=\"" << x << "\" y1=\"" << T << "\" x2=\"" << x << "\" y2=\"" << H - B
       << "\" stroke=\"#ddd\"/><text x=\"" << x << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">1e" << e
       << "</text>\n";
  }
  for (int e = int(y0); e <= int(y1); ++e) {
    const double y = py(std::pow(10.0, e));
    os << "<line x1=\"" << L << "\" y1=\"" << y << "\" x2=\"" << W - R << "\" y2=\"" << y
       << "\" stroke=\"#ddd\"/><text x=\"" << L - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << esc(xlabel)
     << "</text>\n";
  os << "<text transform=\"translate(18," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << esc(ylabel) << "</text>\n";
  int ci = 0, row = 0;
  for (const auto& c : curves) {
    const std::string col = c.color.empty() ? kColors[ci++ % 10] : c.color;
    std::ostringstream pts;
    for (auto [x, y] : c.pts)
      if (x > 0 && y > 0 && std::isfinite(x) && std::isfinite(y)) pts << px(x) << ',' << py(y) << ' ';
    if (c.markers) {
      for (auto [x, y] : c.pts)
        if (x > 0 && y > 0 && std::isfinite(x) && std::isfinite(y))
          os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"1.8\" fill=\"" << col << "\"/>\n";
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.6\""
         << (c.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"" << pts.str() << "\"/>\n";
    }
    const double ly = T + 14 + 16 * row++;
    os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly - 4
       << "\" stroke=\"" << col << "\" stroke-width=\"2\"" << (c.dashed ? " stroke-dasharray=\"4,3\"" : "")
       << "/><text x=\"" << W - R + 36 << "\" y=\"" << ly << "\" font-size=\"10\">" << esc(c.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  os << s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string run_label(const json& run, std::size_t k) {
  const auto& cfg = run.value("config", json::object());
  std::string name = cfg.value("name", "run");
  if (name.size() > 34) name = name.substr(0, 31) + "...";
  return std::to_string(k) + ": " + name;
}

}  // namespace

std::vector<fs::path> emit_plots(const json& manifest, const fs::path& out_dir) {
  std::vector<fs::path> written;
  if (!manifest.contains("runs") || manifest["runs"].empty()) {
    std::cerr << "warning: empty manifest, no plots written\n";
    return written;
  }
  fs::create_directories(out_dir);
  const auto& runs = manifest["runs"];
  json meta = {{"decay", {{"guides", json::array()}}}, {"smoothing", {{"bounds", json::array()}}}};

  std::vector<Curve> decay, smooth, kern;
  std::ostringstream decay_csv, smooth_csv, kern_csv;
  decay_csv << "run,t,sup,guide\n";
  smooth_csv << "run,t,ratio,bound\n";
  kern_csv << "run,r,scaled_kernel\n";
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& run = runs[k];
    const std::string label = run_label(run, k);
    if (run.contains("series") && run["series"].is_object()) {
      const auto& s = run["series"];
      Curve c{label, {}, false, false, kColors[k % 10]};
      for (std::size_t i = 0; i < s["t"].size(); ++i) c.pts.push_back({s["t"][i].get<double>(), s["sup"][i].get<double>()});
      const json& consts = run.value("constants", json());
      Curve guide{"K2 t^(-1/(m-1)) [" + std::to_string(k) + "]", {}, true, false, kColors[k % 10]};
      std::vector<std::string> guide_col(c.pts.size());
      if (consts.is_object()) {
        const double m1 = consts["m1"].get<double>(), m0 = consts["m0"].get<double>(), K0 = consts["K0"].get<double>();
        const double K2 = consts["K2"].get<double>();
        for (std::size_t i = 0; i < c.pts.size(); ++i) {
          const double t = c.pts[i].first;
          if (!(t > 0)) continue;
          const double gv = K2 * std::pow(t, -1.0 / ((t <= K0 ? m0 : m1) - 1));
          guide.pts.push_back({t, gv});
          guide_col[i] = fmt(gv);
        }
        meta["decay"]["guides"].push_back({{"run", label}, {"slope", -1.0 / (m1 - 1)}, {"K2", K2}, {"K0", K0}});
      }
      for (std::size_t i = 0; i < c.pts.size(); ++i)
        decay_csv << k << ',' << fmt(c.pts[i].first) << ',' << fmt(c.pts[i].second) << ',' << guide_col[i] << '\n';
      decay.push_back(c);
      if (!guide.pts.empty()) decay.push_back(guide);

      // ||u(t)|| t^{(N+g)theta} / ||u0||_{L1_phi}^{2s theta}
      if (consts.is_object() && s["l1_phi"].size() > 0) {
        const double N = consts["N"].get<double>(), sp = consts["s"].get<double>(), g = consts["gamma"].get<double>();
        const double L0 = s["l1_phi"][0].get<double>();
        Curve r{label, {}, false, false, kColors[k % 10]};
        if (L0 > 0) {
          const double Ts = std::pow(L0, 2 * sp / (N + g));
          for (std::size_t i = 0; i < s["t"].size(); ++i) {
            const double t = s["t"][i].get<double>();
            if (!(t > 0)) continue;
            const int reg = t >= Ts ? 1 : 0;
            const double th = consts["theta"][reg].get<double>();
            const double ratio = s["sup"][i].get<double>() * std::pow(t, (N + g) * th) / std::pow(L0, 2 * sp * th);
            r.pts.push_back({t, ratio});
            smooth_csv << k << ',' << fmt(t) << ',' << fmt(ratio) << ',' << fmt(consts["K7"].get<double>()) << '\n';
          }
          meta["smoothing"]["bounds"].push_back({{"run", label}, {"K7", consts["K7"]}});
          smooth.push_back(r);
        }
      }
    }
    if (run.contains("kernels")) {
      const auto& kj = run["kernels"];
      Curve c{label, {}, false, true, kColors[k % 10]};
      for (const auto& p : kj["scatter"]) {
        c.pts.push_back({p[0].get<double>(), p[1].get<double>()});
        kern_csv << k << ',' << fmt(p[0].get<double>()) << ',' << fmt(p[1].get<double>()) << '\n';
      }
      kern.push_back(c);
      const double c1 = kj["K1"]["c1"].get<double>();
      if (!c.pts.empty()) {
        double lo = INFINITY, hi = 0;
        for (auto [r, v] : c.pts) lo = std::min(lo, r), hi = std::max(hi, r);
        kern.push_back({"c1 [" + std::to_string(k) + "]", {{lo, c1}, {hi, c1}}, true, false, kColors[k % 10]});
      }
    }
  }
  auto emit = [&](const std::string& stem, const std::string& svg, const std::string& csv) {
    write_text(out_dir / (stem + ".svg"), svg);
    write_text(out_dir / (stem + ".csv"), csv);
    written.push_back(out_dir / (stem + ".svg"));
    written.push_back(out_dir / (stem + ".csv"));
  };
  if (!decay.empty()) emit("decay", svg_loglog("sup-norm decay", "t", "||u(t)||_inf", decay), decay_csv.str());
  if (!smooth.empty())
    emit("smoothing", svg_loglog("smoothing ratio", "t", "||u(t)|| t^((N+g)theta) / L0^(2 s theta)", smooth),
         smooth_csv.str());
  if (!kern.empty())
    emit("kernels", svg_loglog("Green kernel bound", "|x-y|", "K(x,y) |x-y|^(N-2s)", kern), kern_csv.str());
  write_text(out_dir / "plots.json", meta.dump(2) + "\n");
  written.push_back(out_dir / "plots.json");
  return written;
}

}  // namespace nfde
