#include "cqte/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace cqte {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& tok, long row, long col) {
    double v = 0.0;
    const char* b = tok.data();
    const char* e = b + tok.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
        throw CsvError("non-numeric cell '" + tok + "'", row, col);
    return v;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

Dataset Dataset::create(Eigen::VectorXd y, Eigen::VectorXi d, Eigen::MatrixXd x, int l) {
    const int n = static_cast<int>(y.size());
    const int k = static_cast<int>(x.cols());
    if (n < 2) throw Error("dataset needs at least 2 observations, got " + std::to_string(n));
    if (d.size() != n || x.rows() != n) throw Error("dataset: column length mismatch");
    if (l < 1 || l >= k)
        throw Error("l must satisfy 1 <= l < k (l=" + std::to_string(l) +
                    ", k=" + std::to_string(k) + ")");
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(y(i))) throw CsvError("non-finite value in y", i + 1);
        for (int j = 0; j < k; ++j)
            if (!std::isfinite(x(i, j)))
                throw CsvError("non-finite value in x" + std::to_string(j + 1), i + 1);
        if (d(i) != 0 && d(i) != 1)
            throw CsvError("d must be 0 or 1, got " + std::to_string(d(i)), i + 1);
    }
    const int treated = d.sum();
    if (treated == 0) throw Error("no treated observations (all d are 0)");
    if (treated == n) throw Error("no control observations (all d are 1)");

    Dataset ds;
    ds.y_ = std::move(y);
    ds.d_ = std::move(d);
    ds.x_ = std::move(x);
    ds.l_ = l;
    ds.order_.resize(n);
    std::iota(ds.order_.begin(), ds.order_.end(), 0);
    const auto& X = ds.x_;
    const auto& Y = ds.y_;
    const auto& D = ds.d_;
    std::stable_sort(ds.order_.begin(), ds.order_.end(), [&](int a, int b) {
        for (int j = 0; j < k; ++j) {
            if (X(a, j) != X(b, j)) return X(a, j) < X(b, j);
        }
        if (Y(a) != Y(b)) return Y(a) < Y(b);
        return D(a) < D(b);
    });
    return ds;
}

Dataset load_csv(const std::string& path, int l) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw CsvError("empty file: " + path);

    const auto header = split_line(line);
    int ycol = -1, dcol = -1;
    std::vector<int> xcols; // position of x1, x2, ... in the header
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& h = header[c];
        if (h == "y") {
            if (ycol >= 0) throw CsvError("duplicate column y", 0, static_cast<long>(c + 1));
            ycol = static_cast<int>(c);
        } else if (h == "d") {
            if (dcol >= 0) throw CsvError("duplicate column d", 0, static_cast<long>(c + 1));
            dcol = static_cast<int>(c);
        } else if (h.size() > 1 && h[0] == 'x') {
            int idx = 0;
            const auto res = std::from_chars(h.data() + 1, h.data() + h.size(), idx);
            if (res.ec != std::errc() || res.ptr != h.data() + h.size() || idx < 1)
                throw CsvError("unexpected column '" + h + "'", 0, static_cast<long>(c + 1));
            if (static_cast<int>(xcols.size()) < idx) xcols.resize(idx, -1);
            if (xcols[idx - 1] >= 0)
                throw CsvError("duplicate column '" + h + "'", 0, static_cast<long>(c + 1));
            xcols[idx - 1] = static_cast<int>(c);
        } else {
            throw CsvError("unexpected column '" + h + "'", 0, static_cast<long>(c + 1));
        }
    }
    if (ycol < 0) throw CsvError("missing column y");
    if (dcol < 0) throw CsvError("missing column d");
    const int k = static_cast<int>(xcols.size());
    if (k == 0) throw CsvError("missing covariate columns x1..xk");
    for (int j = 0; j < k; ++j)
        if (xcols[j] < 0) throw CsvError("missing column x" + std::to_string(j + 1));

    std::vector<double> yv;
    std::vector<int> dv;
    std::vector<double> xv; // row-major
    long row = 0;
    while (std::getline(in, line)) {
        if (line.empty() && in.peek() == EOF) break;
        ++row;
        const auto toks = split_line(line);
        if (toks.size() != header.size())
            throw CsvError("expected " + std::to_string(header.size()) + " fields, got " +
                               std::to_string(toks.size()),
                           row);
        const double yval = parse_double(toks[ycol], row, ycol + 1);
        if (!std::isfinite(yval)) throw CsvError("non-finite value in y", row, ycol + 1);
        const double draw = parse_double(toks[dcol], row, dcol + 1);
        if (draw != 0.0 && draw != 1.0)
            throw CsvError("d must be 0 or 1, got '" + toks[dcol] + "'", row, dcol + 1);
        yv.push_back(yval);
        dv.push_back(draw == 1.0 ? 1 : 0);
        for (int j = 0; j < k; ++j) {
            const double xval = parse_double(toks[xcols[j]], row, xcols[j] + 1);
            if (!std::isfinite(xval))
                throw CsvError("non-finite value in x" + std::to_string(j + 1), row,
                               xcols[j] + 1);
            xv.push_back(xval);
        }
    }
    const int n = static_cast<int>(yv.size());
    if (n < 2) throw CsvError("need at least 2 data rows, got " + std::to_string(n));

    Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(yv.data(), n);
    Eigen::VectorXi d = Eigen::Map<Eigen::VectorXi>(dv.data(), n);
    Eigen::MatrixXd x(n, k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) x(i, j) = xv[static_cast<std::size_t>(i) * k + j];
    return Dataset::create(std::move(y), std::move(d), std::move(x), l);
}

void save_csv(const Dataset& data, const std::string& path) {
    std::ostringstream out;
    out << "y,d";
    for (int j = 0; j < data.k(); ++j) out << ",x" << (j + 1);
    out << "\n";
    for (int i = 0; i < data.n(); ++i) {
        out << format_double(data.y()(i)) << ',' << data.d()(i);
        for (int j = 0; j < data.k(); ++j) out << ',' << format_double(data.x()(i, j));
        out << "\n";
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write file: " + path);
    f << out.str();
}

EvalGrid validate_grid(const Dataset& data, EvalGrid grid) {
    const int l = data.l();
    Eigen::VectorXd lo(l), hi(l);
    for (int j = 0; j < l; ++j) {
        lo(j) = data.x().col(j).minCoeff();
        hi(j) = data.x().col(j).maxCoeff();
    }
    std::string bad;
    for (const auto& p : grid.points) {
        if (p.size() != l)
            throw ConfigError("grid point has dimension " + std::to_string(p.size()) +
                              ", expected l=" + std::to_string(l));
        for (int j = 0; j < l; ++j) {
            if (!(p(j) > lo(j) && p(j) < hi(j))) {
                std::ostringstream os;
                os << "(";
                for (int t = 0; t < l; ++t) os << (t ? "," : "") << p(t);
                os << ")";
                bad += (bad.empty() ? "" : ", ") + os.str();
                break;
            }
        }
    }
    if (!bad.empty())
        throw ConfigError("grid points outside the interior of the observed X1 range: " + bad);
    for (double tau : grid.taus)
        if (!(tau > 0.0 && tau < 1.0))
            throw ConfigError("tau must lie strictly in (0,1), got " + std::to_string(tau));
    if (grid.points.empty()) throw ConfigError("empty evaluation grid");
    if (grid.taus.empty()) throw ConfigError("no quantile levels given");
    return grid;
}

} // namespace cqte
