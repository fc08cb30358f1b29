#include "fsipinn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fsipinn {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\r')) --end;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) throw DatasetError("not a number: '" + s + "'");
  return v;
}

EulerianRecord FsiDataset::eulerian(std::size_t k) const {
  const std::size_t per = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  const std::size_t n = k / per;
  const std::size_t rem = k % per;
  const int j = static_cast<int>(rem / static_cast<std::size_t>(nx));
  const int i = static_cast<int>(rem % static_cast<std::size_t>(nx));
  return {times[n], cell_x(i), cell_y(j), u[k], v[k], p[k], in_fluid[k] != 0};
}

MarkerRecord FsiDataset::marker(std::size_t k) const {
  const std::size_t n = k / static_cast<std::size_t>(markers);
  const int s = static_cast<int>(k % static_cast<std::size_t>(markers));
  return {times[n], s, mx[k], my[k], mu[k], mv[k], mp[k], mnx[k], mny[k]};
}

std::size_t FsiDataset::slice_of(double t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9);
  if (it == times.end() || std::abs(*it - t) > 1e-9) {
    std::ostringstream msg;
    msg << "no time slice at t=" << t << "; available: " << times.size() << " slices";
    if (!times.empty()) msg << " from " << times.front() << " to " << times.back();
    throw DatasetError(msg.str());
  }
  return static_cast<std::size_t>(it - times.begin());
}

FieldSample FsiDataset::sample(double t, double x, double y) const {
  const std::size_t n = slice_of(t);
  FieldSample out;
  // Bilinear interpolation in cell-centre index space.
  const auto interp = [&](const std::vector<double>& f) {
    const double gx = std::clamp(x / h - 0.5, 0.0, static_cast<double>(nx - 1));
    const double gy = std::clamp(y / h - 0.5, 0.0, static_cast<double>(ny - 1));
    const int i0 = std::min(static_cast<int>(gx), nx - 2 < 0 ? 0 : nx - 2);
    const int j0 = std::min(static_cast<int>(gy), ny - 2 < 0 ? 0 : ny - 2);
    const int i1 = std::min(i0 + 1, nx - 1);
    const int j1 = std::min(j0 + 1, ny - 1);
    const double fx = gx - i0;
    const double fy = gy - j0;
    const double a = f[cell_index(n, i0, j0)] * (1 - fx) + f[cell_index(n, i1, j0)] * fx;
    const double b = f[cell_index(n, i0, j1)] * (1 - fx) + f[cell_index(n, i1, j1)] * fx;
    return a * (1 - fy) + b * fy;
  };
  out.p = interp(p);
  const bool top = y >= 1.0, wall = x <= 0.0 || x >= 1.0 || y <= 0.0 || top;
  if (wall) {
    out.u = top && x > 0.0 && x < 1.0 ? lid_velocity : 0.0;
    out.v = 0.0;
  } else {
    out.u = interp(u);
    out.v = interp(v);
  }
  return out;
}

std::uint64_t FsiDataset::checksum() const {
  std::uint64_t hash = 1469598103934665603ULL;
  const auto feed = [&](const void* data, std::size_t bytes) {
    const auto* c = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      hash ^= c[i];
      hash *= 1099511628211ULL;
    }
  };
  const auto feed_vec = [&](const std::vector<double>& vec) { feed(vec.data(), vec.size() * sizeof(double)); };
  feed(&nx, sizeof nx);
  feed(&ny, sizeof ny);
  feed(&markers, sizeof markers);
  feed_vec(times);
  feed_vec(u);
  feed_vec(v);
  feed_vec(p);
  feed(in_fluid.data(), in_fluid.size());
  for (const auto* vec : {&mx, &my, &mu, &mv, &mp, &mnx, &mny}) feed_vec(*vec);
  return hash;
}

void FsiDataset::validate() const {
  const std::size_t ne = eulerian_count();
  const std::size_t nm = marker_count();
  if (nx <= 0 || ny <= 0 || !(h > 0.0)) throw DatasetError("dataset grid is empty");
  if (u.size() != ne || v.size() != ne || p.size() != ne || in_fluid.size() != ne)
    throw DatasetError("Eulerian arrays do not match grid x time slices");
  for (const auto* vec : {&mx, &my, &mu, &mv, &mp, &mnx, &mny})
    if (vec->size() != nm) throw DatasetError("marker arrays do not match markers x time slices");
}

// ---- CSV I/O ------------------------------------------------------------------

namespace {

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw DatasetError("cannot open " + path.string() + " for writing");
    buf_.reserve(1 << 20);
  }
  ~Writer() { flush(); }
  void text(const char* s) { buf_.append(s); }
  void number(double v) {
    char tmp[32];
    const auto res = std::to_chars(tmp, tmp + sizeof tmp, v);
    buf_.append(tmp, res.ptr);
    maybe_flush();
  }
  void integer(long long v) {
    char tmp[24];
    const auto res = std::to_chars(tmp, tmp + sizeof tmp, v);
    buf_.append(tmp, res.ptr);
  }
  void ch(char c) { buf_.push_back(c); }
  void flush() {
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    buf_.clear();
  }
  bool ok() const { return static_cast<bool>(out_); }

 private:
  void maybe_flush() {
    if (buf_.size() > (1u << 20)) flush();
  }
  std::ofstream out_;
  std::string buf_;
};

// Splits one CSV line into numeric fields.
void parse_fields(const std::string& line, std::vector<double>& fields, std::size_t expected, const std::string& file,
                  std::size_t line_no) {
  fields.clear();
  const char* p = line.data();
  const char* end = line.data() + line.size();
  if (end > p && end[-1] == '\r') --end;
  while (p <= end) {
    const char* comma = static_cast<const char*>(std::memchr(p, ',', static_cast<std::size_t>(end - p)));
    const char* stop = comma ? comma : end;
    double v = 0.0;
    const auto res = std::from_chars(p, stop, v);
    if (res.ec != std::errc() || res.ptr != stop)
      throw DatasetError(file + ":" + std::to_string(line_no) + ": bad number");
    fields.push_back(v);
    if (!comma) break;
    p = comma + 1;
  }
  if (fields.size() != expected)
    throw DatasetError(file + ":" + std::to_string(line_no) + ": expected " + std::to_string(expected) + " columns");
}

std::map<std::string, std::string> read_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("missing " + path.string());
  std::map<std::string, std::string> meta;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DatasetError("metadata line without '=': " + line);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    meta[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return meta;
}

const std::string& require(const std::map<std::string, std::string>& meta, const std::string& key) {
  const auto it = meta.find(key);
  if (it == meta.end()) throw DatasetError("metadata is missing '" + key + "'");
  return it->second;
}

}  // namespace

void write_dataset(const FsiDataset& data, const std::filesystem::path& dir) {
  data.validate();
  std::filesystem::create_directories(dir);
  {
    Writer w(dir / "eulerian.csv");
    w.text("t,x,y,u,v,p,in_fluid\n");
    for (std::size_t k = 0; k < data.eulerian_count(); ++k) {
      const auto r = data.eulerian(k);
      w.number(r.t);
      w.ch(',');
      w.number(r.x);
      w.ch(',');
      w.number(r.y);
      w.ch(',');
      w.number(r.u);
      w.ch(',');
      w.number(r.v);
      w.ch(',');
      w.number(r.p);
      w.ch(',');
      w.integer(r.in_fluid ? 1 : 0);
      w.ch('\n');
    }
    w.flush();
    if (!w.ok()) throw DatasetError("write failed for eulerian.csv");
  }
  {
    Writer w(dir / "markers.csv");
    w.text("t,s,x,y,u,v,p,nx,ny\n");
    for (std::size_t k = 0; k < data.marker_count(); ++k) {
      const auto r = data.marker(k);
      w.number(r.t);
      w.ch(',');
      w.integer(r.s);
      for (double val : {r.x, r.y, r.u, r.v, r.p, r.nx, r.ny}) {
        w.ch(',');
        w.number(val);
      }
      w.ch('\n');
    }
    w.flush();
    if (!w.ok()) throw DatasetError("write failed for markers.csv");
  }
  std::ofstream meta(dir / "metadata.txt");
  auto all = data.metadata;
  all["nx"] = std::to_string(data.nx);
  all["ny"] = std::to_string(data.ny);
  all["h"] = format_double(data.h);
  all["lid_velocity"] = format_double(data.lid_velocity);
  all["markers"] = std::to_string(data.markers);
  all["slices"] = std::to_string(data.slices());
  all["eulerian_records"] = std::to_string(data.eulerian_count());
  all["marker_records"] = std::to_string(data.marker_count());
  for (const auto& [k, v] : all) meta << k << " = " << v << '\n';
  if (!meta) throw DatasetError("write failed for metadata.txt");
}

FsiDataset read_dataset(const std::filesystem::path& dir) {
  FsiDataset d;
  d.metadata = read_metadata(dir / "metadata.txt");
  d.nx = std::stoi(require(d.metadata, "nx"));
  d.ny = std::stoi(require(d.metadata, "ny"));
  d.h = parse_double(require(d.metadata, "h"));
  d.lid_velocity = parse_double(require(d.metadata, "lid_velocity"));
  d.markers = std::stoi(require(d.metadata, "markers"));
  const std::size_t slices = std::stoul(require(d.metadata, "slices"));
  for (const char* key : {"nx", "ny", "h", "lid_velocity", "markers", "slices", "eulerian_records", "marker_records"})
    d.metadata.erase(key);

  const std::size_t per = static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny);
  d.times.resize(slices);
  d.u.resize(slices * per);
  d.v.resize(slices * per);
  d.p.resize(slices * per);
  d.in_fluid.resize(slices * per);
  std::vector<double> f;
  {
    const auto path = dir / "eulerian.csv";
    std::ifstream in(path);
    if (!in) throw DatasetError("missing " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("t,x,y,u,v,p,in_fluid", 0) != 0) throw DatasetError("eulerian.csv: unexpected header");
    std::size_t k = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (k >= slices * per) throw DatasetError("eulerian.csv has more rows than metadata declares");
      parse_fields(line, f, 7, "eulerian.csv", k + 2);
      if (k % per == 0) d.times[k / per] = f[0];
      d.u[k] = f[3];
      d.v[k] = f[4];
      d.p[k] = f[5];
      d.in_fluid[k] = f[6] != 0.0;
      ++k;
    }
    if (k != slices * per) throw DatasetError("eulerian.csv row count does not match metadata");
  }
  const std::size_t nm = slices * static_cast<std::size_t>(d.markers);
  for (auto* vec : {&d.mx, &d.my, &d.mu, &d.mv, &d.mp, &d.mnx, &d.mny}) vec->resize(nm);
  {
    const auto path = dir / "markers.csv";
    std::ifstream in(path);
    if (!in) throw DatasetError("missing " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("t,s,x,y,u,v,p,nx,ny", 0) != 0) throw DatasetError("markers.csv: unexpected header");
    std::size_t k = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (k >= nm) throw DatasetError("markers.csv has more rows than metadata declares");
      parse_fields(line, f, 9, "markers.csv", k + 2);
      d.mx[k] = f[2];
      d.my[k] = f[3];
      d.mu[k] = f[4];
      d.mv[k] = f[5];
      d.mp[k] = f[6];
      d.mnx[k] = f[7];
      d.mny[k] = f[8];
      ++k;
    }
    if (k != nm) throw DatasetError("markers.csv row count does not match metadata");
  }
  d.validate();
  return d;
}

}  // namespace fsipinn
