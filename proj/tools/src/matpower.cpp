#include "dpbl/cli/matpower.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace dpbl::cli {

namespace {

// MATPOWER column indices (0-based).
namespace bus_col {
constexpr int kId = 0, kType = 1, kPd = 2;
}
namespace gen_col {
constexpr int kBus = 0, kStatus = 7, kPmax = 8, kPmin = 9;
}
namespace branch_col {
constexpr int kFrom = 0, kTo = 1, kX = 3, kRateA = 5, kStatus = 10;
}

struct Row {
  std::vector<double> values;
  int line = 0;
};

struct Block {
  std::vector<Row> rows;
  int line = 0;
};

std::string strip_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool comment = false;
  for (char ch : text) {
    if (ch == '\n') comment = false;
    else if (ch == '%') comment = true;
    if (!comment) out.push_back(ch);
  }
  return out;
}

int line_at(std::string_view text, std::size_t pos) {
  int line = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i) line += text[i] == '\n';
  return line;
}

std::optional<double> parse_number(std::string_view tok) {
  if (tok == "Inf" || tok == "inf") return std::numeric_limits<double>::infinity();
  if (tok == "-Inf" || tok == "-inf") return -std::numeric_limits<double>::infinity();
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || end != tok.data() + tok.size()) return std::nullopt;
  return v;
}

// Finds "mpc.<name> = " and returns the position just after '='.
std::optional<std::size_t> find_assignment(const std::string& text, std::string_view name) {
  const std::string key = fmt::format("mpc.{}", name);
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    std::size_t p = pos + key.size();
    const bool boundary = p >= text.size() || !(std::isalnum(static_cast<unsigned char>(text[p])) || text[p] == '_');
    while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
    if (boundary && p < text.size() && text[p] == '=') return p + 1;
    pos += key.size();
  }
  return std::nullopt;
}

Block parse_block(const std::string& text, std::string_view name) {
  const auto at = find_assignment(text, name);
  if (!at) throw CaseError(CaseErrorKind::MissingBlock, fmt::format("missing mpc.{}", name));
  const std::size_t open = text.find('[', *at);
  if (open == std::string::npos) {
    throw CaseError(CaseErrorKind::MissingBlock, fmt::format("mpc.{} is not a matrix", name),
                    line_at(text, *at));
  }
  const std::size_t close = text.find(']', open);
  if (close == std::string::npos) {
    throw CaseError(CaseErrorKind::MalformedRow, fmt::format("unterminated mpc.{}", name),
                    line_at(text, open));
  }
  Block block;
  block.line = line_at(text, open);
  Row row;
  std::string tok;
  int line = block.line;
  auto flush_token = [&] {
    if (tok.empty()) return;
    const auto v = parse_number(tok);
    if (!v) {
      throw CaseError(CaseErrorKind::MalformedRow,
                      fmt::format("mpc.{}: bad number '{}'", name, tok), line);
    }
    if (row.values.empty()) row.line = line;
    row.values.push_back(*v);
    tok.clear();
  };
  auto flush_row = [&] {
    flush_token();
    if (!row.values.empty()) block.rows.push_back(std::move(row));
    row = Row{};
  };
  for (std::size_t i = open + 1; i < close; ++i) {
    const char ch = text[i];
    if (ch == ';' || ch == '\n') {
      flush_row();
      if (ch == '\n') ++line;
    } else if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
      flush_token();
    } else {
      tok.push_back(ch);
    }
  }
  flush_row();
  return block;
}

double parse_scalar(const std::string& text, std::string_view name) {
  const auto at = find_assignment(text, name);
  if (!at) throw CaseError(CaseErrorKind::MissingBlock, fmt::format("missing mpc.{}", name));
  const std::size_t end = text.find(';', *at);
  std::string tok = text.substr(*at, end == std::string::npos ? std::string::npos : end - *at);
  const auto first = tok.find_first_not_of(" \t\r\n");
  const auto last = tok.find_last_not_of(" \t\r\n");
  if (first == std::string::npos) {
    throw CaseError(CaseErrorKind::MalformedRow, fmt::format("empty mpc.{}", name),
                    line_at(text, *at));
  }
  const auto v = parse_number(std::string_view(tok).substr(first, last - first + 1));
  if (!v) {
    throw CaseError(CaseErrorKind::MalformedRow, fmt::format("bad mpc.{}", name),
                    line_at(text, *at));
  }
  return *v;
}

void require_columns(const Row& row, std::size_t n, std::string_view block) {
  if (row.values.size() < n) {
    throw CaseError(CaseErrorKind::MalformedRow,
                    fmt::format("mpc.{} row has {} columns, need {}", block, row.values.size(), n),
                    row.line);
  }
}

int as_int(const Row& row, int col, std::string_view block) {
  const double v = row.values[static_cast<std::size_t>(col)];
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw CaseError(CaseErrorKind::MalformedRow,
                    fmt::format("mpc.{} column {} must be an integer", block, col + 1), row.line);
  }
  return static_cast<int>(v);
}

// Reads a model-2 polynomial cost row into (c1, c0) per MW.
std::pair<double, double> linear_cost(const Row& row) {
  require_columns(row, 4, "gencost");
  const int model = as_int(row, 0, "gencost");
  if (model != 2) {
    throw CaseError(CaseErrorKind::MalformedRow,
                    "only polynomial (model 2) generator costs are supported", row.line);
  }
  const int ncost = as_int(row, 3, "gencost");
  if (ncost < 1) throw CaseError(CaseErrorKind::MalformedRow, "gencost NCOST < 1", row.line);
  require_columns(row, static_cast<std::size_t>(4 + ncost), "gencost");
  // Coefficients run from the highest degree down to the constant.
  const auto coef = [&](int degree) {
    return degree < ncost ? row.values[static_cast<std::size_t>(4 + ncost - 1 - degree)] : 0.0;
  };
  for (int degree = 2; degree < ncost; ++degree) {
    if (coef(degree) != 0.0) {
      throw CaseError(CaseErrorKind::QuadraticCostUnsupported,
                      fmt::format("generator cost has a nonzero degree-{} term", degree),
                      row.line);
    }
  }
  return {coef(1), coef(0)};
}

}  // namespace

const char* to_string(CaseErrorKind kind) {
  switch (kind) {
    case CaseErrorKind::MissingBlock: return "MissingBlock";
    case CaseErrorKind::MalformedRow: return "MalformedRow";
    case CaseErrorKind::MultipleSlack: return "MultipleSlack";
    case CaseErrorKind::MissingSlack: return "MissingSlack";
    case CaseErrorKind::QuadraticCostUnsupported: return "QuadraticCostUnsupported";
    case CaseErrorKind::DisconnectedNetwork: return "DisconnectedNetwork";
    case CaseErrorKind::InvalidData: return "InvalidData";
    case CaseErrorKind::Io: return "Io";
  }
  return "?";
}

CaseError::CaseError(CaseErrorKind kind, const std::string& what, int line)
    : std::runtime_error(line > 0 ? fmt::format("{} (line {}): {}", to_string(kind), line, what)
                                  : fmt::format("{}: {}", to_string(kind), what)),
      kind_(kind),
      line_(line) {}

Case parse_matpower(std::string_view raw) {
  const std::string text = strip_comments(raw);
  Network net;
  net.base_mva = parse_scalar(text, "baseMVA");
  if (!(net.base_mva > 0) || !std::isfinite(net.base_mva)) {
    throw CaseError(CaseErrorKind::InvalidData, "baseMVA must be positive");
  }
  const double base = net.base_mva;
  const Block buses = parse_block(text, "bus");
  const Block gens = parse_block(text, "gen");
  const Block branches = parse_block(text, "branch");
  const Block costs = parse_block(text, "gencost");

  std::map<int, int> index_of;
  std::vector<double> demand;
  std::optional<int> slack;
  for (const Row& row : buses.rows) {
    require_columns(row, 3, "bus");
    const int id = as_int(row, bus_col::kId, "bus");
    if (!index_of.emplace(id, static_cast<int>(net.buses.size())).second) {
      throw CaseError(CaseErrorKind::MalformedRow, fmt::format("duplicate bus id {}", id), row.line);
    }
    const double pd = row.values[bus_col::kPd];
    if (!std::isfinite(pd)) throw CaseError(CaseErrorKind::MalformedRow, "Pd must be finite", row.line);
    if (as_int(row, bus_col::kType, "bus") == 3) {
      if (slack) {
        throw CaseError(CaseErrorKind::MultipleSlack,
                        fmt::format("buses {} and {} are both type 3",
                                    net.buses[static_cast<std::size_t>(*slack)].id, id),
                        row.line);
      }
      slack = static_cast<int>(net.buses.size());
    }
    net.buses.push_back(Bus{id, pd != 0.0});
    if (pd != 0.0) demand.push_back(pd / base);
  }
  if (net.buses.empty()) throw CaseError(CaseErrorKind::InvalidData, "mpc.bus is empty", buses.line);
  if (!slack) throw CaseError(CaseErrorKind::MissingSlack, "no type-3 bus", buses.line);
  net.slack_bus = *slack;

  auto bus_ref = [&](const Row& row, int col, std::string_view block) {
    const int id = as_int(row, col, block);
    const auto it = index_of.find(id);
    if (it == index_of.end()) {
      throw CaseError(CaseErrorKind::MalformedRow, fmt::format("unknown bus {}", id), row.line);
    }
    return it->second;
  };

  if (costs.rows.size() < gens.rows.size()) {
    throw CaseError(CaseErrorKind::MalformedRow, "mpc.gencost has fewer rows than mpc.gen",
                    costs.line);
  }
  for (std::size_t g = 0; g < gens.rows.size(); ++g) {
    const Row& row = gens.rows[g];
    require_columns(row, 10, "gen");
    const auto [c1, c0] = linear_cost(costs.rows[g]);
    if (row.values[gen_col::kStatus] <= 0) continue;
    Generator gen;
    gen.bus = bus_ref(row, gen_col::kBus, "gen");
    gen.p_max = row.values[gen_col::kPmax] / base;
    gen.p_min = row.values[gen_col::kPmin] / base;
    gen.cost_c1 = c1 * base;
    gen.cost_c0 = c0;
    net.generators.push_back(gen);
  }

  for (const Row& row : branches.rows) {
    require_columns(row, 6, "branch");
    if (row.values.size() > branch_col::kStatus && row.values[branch_col::kStatus] <= 0) continue;
    const double x = row.values[branch_col::kX];
    if (x == 0.0 || !std::isfinite(x)) {
      throw CaseError(CaseErrorKind::MalformedRow, "branch reactance must be finite and nonzero",
                      row.line);
    }
    const double rate = row.values[branch_col::kRateA];
    Line line;
    line.from = bus_ref(row, branch_col::kFrom, "branch");
    line.to = bus_ref(row, branch_col::kTo, "branch");
    line.susceptance = 1.0 / x;
    line.flow_limit = rate == 0.0 ? std::numeric_limits<double>::infinity() : rate / base;
    net.lines.push_back(line);
  }

  if (!net.connected()) {
    throw CaseError(CaseErrorKind::DisconnectedNetwork, "in-service branches do not span all buses");
  }
  try {
    net.validate();
  } catch (const std::invalid_argument& e) {
    throw CaseError(CaseErrorKind::InvalidData, e.what());
  }
  return Case{std::move(net), DemandVector(std::move(demand))};
}

Case read_matpower(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CaseError(CaseErrorKind::Io, fmt::format("cannot read {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_matpower(buf.str());
}

std::string emit_matpower(const Network& net, const DemandVector& demand, std::string_view name) {
  const std::vector<int> demand_buses = net.demand_buses();
  if (demand.size() != demand_buses.size()) {
    throw std::invalid_argument("emit_matpower: demand size does not match the network");
  }
  const double base = net.base_mva;
  std::vector<double> pd(net.buses.size(), 0.0);
  for (std::size_t k = 0; k < demand_buses.size(); ++k) {
    pd[static_cast<std::size_t>(demand_buses[k])] = demand[k] * base;
  }
  std::vector<bool> has_gen(net.buses.size(), false);
  for (const Generator& g : net.generators) has_gen[static_cast<std::size_t>(g.bus)] = true;

  std::string out = fmt::format("function mpc = {}\nmpc.version = '2';\nmpc.baseMVA = {:.17g};\n\n",
                                name, base);
  out += "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\nmpc.bus = [\n";
  for (std::size_t b = 0; b < net.buses.size(); ++b) {
    const int type = static_cast<int>(b) == net.slack_bus ? 3 : (has_gen[b] ? 2 : 1);
    out += fmt::format("\t{}\t{}\t{:.17g}\t0\t0\t0\t1\t1\t0\t0\t1\t1.1\t0.9;\n", net.buses[b].id,
                       type, pd[b]);
  }
  out += "];\n\n%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin\nmpc.gen = [\n";
  for (const Generator& g : net.generators) {
    out += fmt::format("\t{}\t0\t0\t0\t0\t1\t{:.17g}\t1\t{:.17g}\t{:.17g};\n",
                       net.buses[static_cast<std::size_t>(g.bus)].id, base, g.p_max * base,
                       g.p_min * base);
  }
  out += "];\n\n%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax\n"
         "mpc.branch = [\n";
  for (const Line& l : net.lines) {
    const double rate = std::isfinite(l.flow_limit) ? l.flow_limit * base : 0.0;
    out += fmt::format("\t{}\t{}\t0\t{:.17g}\t0\t{:.17g}\t0\t0\t0\t0\t1\t-360\t360;\n",
                       net.buses[static_cast<std::size_t>(l.from)].id,
                       net.buses[static_cast<std::size_t>(l.to)].id, 1.0 / l.susceptance, rate);
  }
  out += "];\n\n%% model startup shutdown n c1 c0\nmpc.gencost = [\n";
  for (const Generator& g : net.generators) {
    out += fmt::format("\t2\t0\t0\t2\t{:.17g}\t{:.17g};\n", g.cost_c1 / base, g.cost_c0);
  }
  out += "];\n";
  return out;
}

}  // namespace dpbl::cli
