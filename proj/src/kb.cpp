#include "medkg/kb.hpp"

#include <sstream>

namespace medkg {

namespace {

std::vector<std::string> tsv_lines(const std::string& path) {
  std::string content = read_file(path);
  std::vector<std::string> lines;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

LoadReport KnowledgeBase::load_triplets(const std::string& path) {
  LoadReport report;
  std::size_t lineno = 0;
  for (const std::string& line : tsv_lines(path)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line, '\t');
    if (cols.size() != 3 || cols[0].empty() || cols[1].empty() || cols[2].empty())
      throw ValidationError(path + ":" + std::to_string(lineno) + ": malformed triplet row (need 3 columns)");
    Triplet t{EntityId::protein(cols[0]), cols[1], EntityId::drug(cols[2])};
    if (triplets_.count(t)) {
      ++report.duplicates;
    } else {
      add_triplet(t);
      ++report.rows;
    }
  }
  return report;
}

LoadReport KnowledgeBase::load_pathways(const std::string& path) {
  LoadReport report;
  std::size_t lineno = 0;
  for (const std::string& line : tsv_lines(path)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line, '\t');
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
      throw ValidationError(path + ":" + std::to_string(lineno) + ": malformed pathway row (need 2 columns)");
    if (cols[0] == cols[1]) {
      report.warnings.push_back(path + ":" + std::to_string(lineno) + ": self-loop pathway skipped: " + cols[0]);
      continue;
    }
    PathwayPair p{EntityId::protein(cols[0]), EntityId::protein(cols[1])};
    if (pathways_.count(p)) {
      ++report.duplicates;
    } else {
      add_pathway(p.from, p.to);
      ++report.rows;
    }
  }
  return report;
}

void KnowledgeBase::add_triplet(const Triplet& t) {
  if (t.protein.kind != EntityKind::Protein || t.drug.kind != EntityKind::Drug)
    throw ContractError("triplet fields must be (protein, action, drug)");
  if (triplets_.insert(t).second) drug_targets_[t.drug].insert(t.protein);
}

void KnowledgeBase::add_pathway(const EntityId& from, const EntityId& to) {
  if (from.kind != EntityKind::Protein || to.kind != EntityKind::Protein)
    throw ContractError("pathway endpoints must be proteins");
  if (from == to) throw ContractError("pathway self-loop rejected: " + from.accession);
  if (pathways_.insert({from, to}).second) {
    pathway_out_[from].insert(to);
    pathway_in_[to].insert(from);
  }
}

std::set<EntityId> KnowledgeBase::targets_of(const EntityId& drug) const {
  if (drug.kind != EntityKind::Drug)
    throw ContractError("targets_of expects a drug, got " + drug.str());
  auto it = drug_targets_.find(drug);
  return it == drug_targets_.end() ? std::set<EntityId>{} : it->second;
}

std::set<EntityId> KnowledgeBase::interactors_of(const EntityId& protein, bool directed) const {
  if (protein.kind != EntityKind::Protein)
    throw ContractError("interactors_of expects a protein, got " + protein.str());
  std::set<EntityId> out;
  if (auto it = pathway_out_.find(protein); it != pathway_out_.end()) out.insert(it->second.begin(), it->second.end());
  if (!directed)
    if (auto it = pathway_in_.find(protein); it != pathway_in_.end()) out.insert(it->second.begin(), it->second.end());
  return out;
}

bool KnowledgeBase::has_pathway_either(const EntityId& a, const EntityId& b) const {
  return pathways_.count({a, b}) > 0 || pathways_.count({b, a}) > 0;
}

bool KnowledgeBase::is_target(const EntityId& protein, const EntityId& drug) const {
  auto it = drug_targets_.find(drug);
  return it != drug_targets_.end() && it->second.count(protein) > 0;
}

std::vector<EntityId> KnowledgeBase::drugs() const {
  std::set<EntityId> s;
  for (const auto& t : triplets_) s.insert(t.drug);
  return {s.begin(), s.end()};
}

std::vector<EntityId> KnowledgeBase::proteins() const {
  std::set<EntityId> s;
  for (const auto& t : triplets_) s.insert(t.protein);
  for (const auto& p : pathways_) {
    s.insert(p.from);
    s.insert(p.to);
  }
  return {s.begin(), s.end()};
}

std::vector<std::string> KnowledgeBase::actions() const {
  std::set<std::string> s;
  for (const auto& t : triplets_) s.insert(t.action);
  return {s.begin(), s.end()};
}

std::string KnowledgeBase::save_triplets() const {
  std::ostringstream out;
  for (const auto& t : triplets_) out << t.protein.accession << '\t' << t.action << '\t' << t.drug.accession << '\n';
  return out.str();
}

std::string KnowledgeBase::save_pathways() const {
  std::ostringstream out;
  for (const auto& p : pathways_) out << p.from.accession << '\t' << p.to.accession << '\n';
  return out.str();
}

}  // namespace medkg
