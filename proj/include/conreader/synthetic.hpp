#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "conreader/data.hpp"
#include "conreader/definitions.hpp"
#include "conreader/metrics.hpp"

namespace conreader {

struct SynthConfig {
  int n_contracts = 40;
  int n_types = 6;
  int n_defs_per_contract = 6;
  uint64_t seed = 1;
  // fraction of definitions written with wording outside the extraction
  // pattern family; 0 keeps extraction perfect by construction
  double def_noise = 0.0;
  // fraction of group-typed clauses written in term-aliased form, where only
  // the definition of a made-up term identifies the clause type
  double aliased_fraction = 0.45;
  // chance of planting a cross-reference lookalike in a different article
  double crossref_fraction = 0.35;
  double second_clause_prob = 0.15;
  // chance that a plain clause leads with its type heading, the way lawyers
  // label clauses; aliased clauses never carry one
  double heading_prob = 0.75;
  std::string id_prefix = "syn";
};

struct SynthOutput {
  std::vector<Contract> contracts;
  std::vector<Example> ca_examples;
  std::vector<TypedClause> clauses;
  std::vector<Definition> gold_definitions;
  std::vector<std::string> type_names;
};

namespace synth {

inline const std::vector<std::string>& type_name_pool() {
  static const std::vector<std::string> pool = {
      "Governing Law",    "Agreement Date", "Expiration Date",
      "License Grant",    "Insurance",      "Non-Compete",
      "Audit Rights",     "Payment Terms",  "Confidentiality",
      "Termination For Convenience", "Assignment", "Warranty Duration"};
  return pool;
}

inline const std::vector<std::string>& party_pool() {
  static const std::vector<std::string> pool = {
      "Apex Holdings Inc",      "Bluefield Systems LLC",  "Cedar Ridge Partners",
      "Dynatech Industries",    "Eastlake Ventures Corp", "Fairmont Analytics Inc",
      "Granite Peak Software",  "Harborline Logistics",   "Ironwood Capital LLC",
      "Jetstream Networks Inc", "Kingsford Materials",    "Lakeshore Biotech Corp",
      "Meridian Fabrication",   "Northgate Services LLC", "Oakhurst Technologies",
      "Pinnacle Data Systems",  "Quartzline Media Inc",   "Riverton Components",
      "Stonebridge Labs LLC",   "Telford Instruments",    "Umber Valley Farms",
      "Vantage Point Software", "Westmark Consulting",    "Yellowpine Energy Corp"};
  return pool;
}

inline const std::vector<std::string>& state_pool() {
  static const std::vector<std::string> pool = {
      "Delaware",  "New York",   "California", "Texas",    "Illinois",
      "Virginia",  "Washington", "Georgia",    "Colorado", "Massachusetts"};
  return pool;
}

// invented capitalized terms; none carries clause-type vocabulary
inline const std::vector<std::string>& rare_term_pool() {
  static const std::vector<std::string> pool = {
      "Quorvane",  "Breltice",  "Marzonet",  "Veldrith",  "Cindralux", "Torvalind",
      "Peltrassa", "Windrover", "Gallivent", "Morrowick", "Selbright", "Trundelay",
      "Ferrowist", "Lumivaren", "Hollandra", "Bravenock", "Cruxalend", "Dorivant",
      "Ellinmore", "Fandrille", "Graymarsh", "Hexavault", "Irontrace", "Juniperon",
      "Kestrelow", "Larkspind", "Mistraven", "Nightfell", "Ospravine", "Pendrakon"};
  return pool;
}

inline const std::vector<std::string>& common_term_pool() {
  static const std::vector<std::string> pool = {
      "Licensed Software",       "Deliverables",        "Confidential Information",
      "Service Fees",            "Documentation",       "Intellectual Property",
      "Work Product",            "Support Services",    "Acceptance Criteria",
      "Maintenance Release",     "Authorized Users",    "Professional Services"};
  return pool;
}

inline const std::vector<std::string>& common_def_bodies() {
  static const std::vector<std::string> pool = {
      "all materials, reports and other items delivered or required to be delivered hereunder",
      "any information disclosed by one party to the other that is marked or identified as confidential",
      "the fees payable for the services as set forth in the applicable statement of work",
      "the user manuals, technical specifications and related materials made available by the provider",
      "all patents, copyrights, trade secrets and other proprietary rights of a party",
      "the deliverables and all related work created in the performance of the services",
      "the support and maintenance services described in the applicable schedule",
      "the objective tests and standards used to determine conformity of the deliverables",
      "any update, upgrade or error correction made generally available to customers",
      "the employees and contractors of the recipient who have a need to access the materials",
      "the consulting and implementation services performed on a time and materials basis",
      "the computer programs in object code form furnished under this Agreement"};
  return pool;
}

inline const std::vector<std::string>& filler_pool() {
  static const std::vector<std::string> pool = {
      "The headings contained herein are for convenience of reference only and shall not affect the interpretation of this Agreement",
      "Each party shall bear its own costs and expenses incurred in connection with the negotiation of this Agreement",
      "No waiver of any provision hereof shall be effective unless made in writing and signed by the waiving party",
      "If any provision of this Agreement is held invalid, the remaining provisions shall continue in full force and effect",
      "All notices hereunder shall be delivered by hand, by certified mail or by overnight courier to the addresses set forth above",
      "This Agreement may be executed in counterparts, each of which shall be deemed an original",
      "Neither party shall be liable for any failure to perform caused by events beyond its reasonable control",
      "The relationship of the parties is that of independent contractors and nothing herein creates any agency or partnership",
      "Each party represents that it has full power and authority to enter into this Agreement",
      "The parties have caused this Agreement to be executed by their duly authorized representatives",
      "Nothing in this Agreement shall be construed to confer any rights upon any third party",
      "The recitals set forth above are incorporated into and made a part of this Agreement",
      "Any amendment to this Agreement must be in writing and executed by both parties",
      "Failure to enforce any provision shall not constitute a waiver of future enforcement of that provision",
      "Words importing the singular include the plural and vice versa where the context requires"};
  return pool;
}

// sentence tails appended to aliased clauses so same-shell sentences of
// different types stay below the Jaccard TP threshold
inline const std::vector<std::string>& tail_pool() {
  static const std::vector<std::string> pool = {
      "for all purposes of this Agreement",
      "notwithstanding anything to the contrary contained herein",
      "unless otherwise agreed in writing by the parties",
      "subject to the conditions described in the applicable schedule",
      "without further notice or action by either party",
      "as determined in accordance with the books and records of the parties",
      "except as expressly provided otherwise in this section",
      "in each case to the fullest extent permitted by applicable law"};
  return pool;
}

struct TypeTemplates {
  std::vector<std::string> plain;  // placeholders: {A} {B} {STATE} {DATE} {AMOUNT} {N} {CTERM}
  int alias_group = -1;            // types sharing an aliased sentence shell
  std::string alias_def_body;     // definition body identifying the type
};

inline std::map<int, TypeTemplates> build_templates() {
  std::map<int, TypeTemplates> t;
  t[0].plain = {
      "This Agreement shall be governed by and construed in accordance with the laws of the State of {STATE}, without regard to its conflict of laws principles",
      "All questions concerning the validity and interpretation of this Agreement shall be determined under the internal laws of the State of {STATE}",
      "This Agreement and any dispute arising out of or relating to it shall be governed by the laws of the State of {STATE}",
      "The construction and performance of this Agreement shall be governed by the substantive laws of the State of {STATE} excluding its choice of law rules"};
  t[1].plain = {
      "This Agreement is entered into and made effective as of {DATE}, by and between {A} and {B}",
      "This Agreement is made as of {DATE} between {A} and {B} and binds their respective successors",
      "This Agreement is dated and takes effect on {DATE} upon execution by both parties"};
  t[1].alias_group = 0;
  t[1].alias_def_body =
      "the date on which this Agreement is executed by the parties and becomes effective";
  t[2].plain = {
      "This Agreement shall expire on {DATE}, unless earlier terminated in accordance with the terms hereof",
      "The term of this Agreement shall end on {DATE} without further action by either party",
      "Unless renewed by mutual written consent, this Agreement terminates on {DATE}"};
  t[2].alias_group = 0;
  t[2].alias_def_body =
      "the date on which this Agreement expires and ceases to have any further effect";
  t[3].plain = {
      "{A} hereby grants to {B} a non-exclusive, non-transferable license to use the {CTERM} solely for its internal business purposes",
      "Subject to the terms and conditions hereof, {A} grants {B} a limited, revocable license to access and use the {CTERM} during the Term",
      "{A} grants to {B} a worldwide, royalty-free license under its rights in the {CTERM} to reproduce and use the {CTERM} as permitted herein"};
  t[4].plain = {
      "{B} shall maintain commercial general liability insurance with limits of not less than {AMOUNT} per occurrence throughout the Term",
      "During the Term, {B} shall carry insurance coverage in commercially reasonable amounts and shall name {A} as an additional insured",
      "{B} shall procure and keep in force workers compensation and liability insurance policies with limits of at least {AMOUNT}"};
  t[4].alias_group = 1;
  t[4].alias_def_body =
      "the commercial general liability insurance coverage with limits of not less than one million dollars required hereunder";
  t[5].plain = {
      "During the Term and for {N} years thereafter, {B} shall not engage in any business that competes with the business of {A} in the restricted territory",
      "{B} agrees that it will not, directly or indirectly, compete with {A} or solicit the customers of {A} for a period of {N} years",
      "For {N} years following termination, {B} shall refrain from developing or marketing any product competitive with the offerings of {A}"};
  t[5].alias_group = 1;
  t[5].alias_def_body =
      "the covenant of the receiving party not to engage in any competing business within the restricted territory";
  t[6].plain = {
      "{A} may, upon reasonable notice and during normal business hours, audit the books and records of {B} relating to this Agreement",
      "{B} shall keep complete records and {A} shall have the right to examine such records once per calendar year"};
  t[7].plain = {
      "{B} shall pay all undisputed invoices within thirty days of receipt, and late amounts shall accrue interest at the lesser of one percent per month or the maximum lawful rate",
      "Fees are payable in United States dollars within forty-five days after the invoice date, without setoff or deduction"};
  t[8].plain = {
      "Each party shall hold the {CTERM} of the other party in strict confidence and shall not disclose it except to those with a need to know",
      "The receiving party shall protect the disclosing party's {CTERM} with at least the same degree of care it uses for its own similar information"};
  t[9].plain = {
      "Either party may terminate this Agreement for convenience upon sixty days prior written notice to the other party",
      "{A} may terminate this Agreement at any time for its convenience by giving {B} ninety days written notice"};
  t[10].plain = {
      "Neither party may assign this Agreement without the prior written consent of the other, except to a successor in connection with a merger or sale of substantially all assets",
      "Any attempted assignment of this Agreement in violation of this section shall be null and void"};
  t[11].plain = {
      "{A} warrants that the {CTERM} will perform substantially in accordance with the Documentation for a period of {N} years after delivery",
      "The warranty period for the {CTERM} shall be {N} years from the date of acceptance"};
  return t;
}

// aliased shells by group; the {TERM} is a defined made-up word
inline const std::vector<std::string>& alias_shells(int group) {
  static const std::vector<std::string> dates = {
      "The {TERM} shall occur on {DATE} {TAIL}",
      "The parties acknowledge that the {TERM} falls on {DATE} {TAIL}",
      "For the avoidance of doubt, the {TERM} is {DATE} {TAIL}"};
  static const std::vector<std::string> covenants = {
      "{B} shall maintain the {TERM} in full force and effect during the Term {TAIL}",
      "The {TERM} shall remain binding upon {B} throughout the Term {TAIL}",
      "{B} covenants to keep the {TERM} effective at all times during the Term {TAIL}"};
  return group == 0 ? dates : covenants;
}

struct Piece {
  std::string sentence;  // without trailing period
  int clause_type = -1;  // -1 for filler/distractors
};

inline std::string substitute(std::string s,
                              const std::map<std::string, std::string>& vars) {
  for (const auto& [key, value] : vars) {
    const std::string pat = "{" + key + "}";
    size_t pos;
    while ((pos = s.find(pat)) != std::string::npos) s.replace(pos, pat.size(), value);
  }
  return s;
}

inline std::string random_date(Rng& rng) {
  static const std::vector<std::string> months = {"January",   "February", "March",    "April",
                                                  "May",       "June",     "July",     "August",
                                                  "September", "October",  "November", "December"};
  return months[static_cast<size_t>(rng.uniform_int(0, 11))] + " " +
         std::to_string(rng.uniform_int(1, 28)) + ", " + std::to_string(rng.uniform_int(2018, 2026));
}

inline std::string random_amount(Rng& rng) {
  static const std::vector<std::string> amounts = {"$500,000", "$1,000,000", "$2,000,000",
                                                   "$5,000,000"};
  return amounts[static_cast<size_t>(rng.uniform_int(0, 3))];
}

}  // namespace synth

// Deterministic synthetic contract corpus. Contracts carry a Definitions
// article, typed clause sentences spread over later articles, made-up terms
// whose definitions disambiguate otherwise identical clause shells, and
// cross-reference lookalikes planted away from the real clause.
inline SynthOutput generate_synthetic(const SynthConfig& cfg) {
  using namespace synth;
  if (cfg.n_contracts < 1 || cfg.n_types < 1)
    throw ConfigError("generate_synthetic: counts must be >= 1");
  if (cfg.n_types > static_cast<int>(type_name_pool().size()))
    throw ConfigError("generate_synthetic: at most " +
                      std::to_string(type_name_pool().size()) + " clause types supported");

  SynthOutput out;
  out.type_names.assign(type_name_pool().begin(), type_name_pool().begin() + cfg.n_types);
  const auto templates = build_templates();

  for (int ci = 0; ci < cfg.n_contracts; ++ci) {
    Rng rng = Rng(cfg.seed).derive("contract-" + std::to_string(ci));
    Contract contract;
    contract.id = cfg.id_prefix + "-" + std::to_string(ci);

    const std::string party_a = rng.pick(party_pool());
    std::string party_b = rng.pick(party_pool());
    while (party_b == party_a) party_b = rng.pick(party_pool());
    const int kind = rng.uniform_int(0, 2);  // 0 license, 1 services, 2 nda
    static const std::vector<std::string> kind_titles = {
        "SOFTWARE LICENSE AGREEMENT", "MASTER SERVICES AGREEMENT",
        "MUTUAL NONDISCLOSURE AGREEMENT"};

    // which types this contract contains
    auto present_prob = [&](int type) {
      switch (type) {
        case 0: return 0.9;                                   // governing law
        case 1: return 0.95;                                  // agreement date
        case 2: return 0.85;                                  // expiration date
        case 3: return kind == 0 ? 1.0 : (kind == 1 ? 0.25 : 0.0);  // license grant
        case 4: return kind == 1 ? 0.95 : (kind == 0 ? 0.6 : 0.15); // insurance
        case 5: return kind == 2 ? 0.95 : 0.5;                // non-compete
        default: return 0.55;
      }
    };
    std::vector<int> present;
    for (int type = 0; type < cfg.n_types; ++type)
      if (rng.bernoulli(present_prob(type))) present.push_back(type);

    // assign per-contract terms
    std::vector<std::string> rare_terms;
    {
      std::vector<std::string> pool = rare_term_pool();
      rng.shuffle(pool);
      rare_terms.assign(pool.begin(), pool.begin() + 8);
    }
    size_t next_rare = 0;
    const std::string common_term = rng.pick(common_term_pool());

    struct PlannedClause {
      int type;
      bool aliased;
      std::string term;  // aliased term, when aliased
    };
    std::vector<PlannedClause> planned;
    for (int type : present) {
      const auto& tpl = templates.at(type);
      const int copies = rng.bernoulli(cfg.second_clause_prob) ? 2 : 1;
      for (int k = 0; k < copies; ++k) {
        PlannedClause pc;
        pc.type = type;
        pc.aliased = tpl.alias_group >= 0 && cfg.n_defs_per_contract > 0 &&
                     rng.bernoulli(cfg.aliased_fraction);
        if (pc.aliased && next_rare < rare_terms.size()) pc.term = rare_terms[next_rare++];
        if (pc.term.empty()) pc.aliased = false;
        planned.push_back(pc);
      }
    }

    // definitions: aliased terms first, then common terms
    struct PlannedDef {
      std::string term;
      std::string body;
      bool noisy;
    };
    std::vector<PlannedDef> defs;
    for (const auto& pc : planned)
      if (pc.aliased)
        defs.push_back({pc.term, templates.at(pc.type).alias_def_body, false});
    {
      std::vector<std::string> commons = common_term_pool();
      rng.shuffle(commons);
      size_t i = 0;
      defs.push_back({common_term, rng.pick(common_def_bodies()), false});
      while (static_cast<int>(defs.size()) < cfg.n_defs_per_contract && i < commons.size()) {
        if (commons[i] != common_term)
          defs.push_back({commons[i], rng.pick(common_def_bodies()), false});
        ++i;
      }
    }
    if (static_cast<int>(defs.size()) > cfg.n_defs_per_contract && cfg.n_defs_per_contract > 0)
      defs.resize(static_cast<size_t>(cfg.n_defs_per_contract));
    if (cfg.n_defs_per_contract == 0) defs.clear();
    for (auto& d : defs) d.noisy = rng.bernoulli(cfg.def_noise);
    // drop aliasing whose definition was truncated away or made noisy
    for (auto& pc : planned) {
      if (!pc.aliased) continue;
      bool found = false;
      for (const auto& d : defs)
        if (d.term == pc.term && !d.noisy) found = true;
      if (!found) pc.aliased = false;
    }

    // build article contents
    const std::map<std::string, std::string> base_vars = {
        {"A", party_a}, {"B", party_b}, {"CTERM", common_term}};
    std::vector<std::string> gold_texts_so_far;
    auto render_clause = [&](const PlannedClause& pc) {
      std::map<std::string, std::string> vars = base_vars;
      vars["STATE"] = rng.pick(state_pool());
      vars["DATE"] = random_date(rng);
      vars["AMOUNT"] = random_amount(rng);
      vars["N"] = std::to_string(rng.uniform_int(1, 5));
      std::string sentence;
      for (int attempt = 0; attempt < 6; ++attempt) {
        if (pc.aliased) {
          const auto& shells = alias_shells(templates.at(pc.type).alias_group);
          vars["TERM"] = pc.term;
          vars["TAIL"] = rng.pick(tail_pool());
          sentence = substitute(rng.pick(shells), vars);
        } else {
          sentence = substitute(rng.pick(templates.at(pc.type).plain), vars);
          if (rng.bernoulli(cfg.heading_prob))
            sentence = out.type_names[static_cast<size_t>(pc.type)] + ". " + sentence;
        }
        bool clash = false;
        for (const auto& g : gold_texts_so_far)
          if (metrics::jaccard(sentence, g) >= 0.45) clash = true;
        if (!clash) break;
        vars["TAIL"] = rng.pick(tail_pool());
        vars["DATE"] = random_date(rng);
      }
      gold_texts_so_far.push_back(sentence);
      return sentence;
    };

    // article plan: definitions, term, rights, covenants, general
    struct ArticleDraft {
      std::string title;
      std::vector<Piece> pieces;
    };
    std::vector<ArticleDraft> articles;
    if (!defs.empty()) articles.push_back({"ARTICLE I - DEFINITIONS", {}});
    const size_t term_article = articles.size();
    articles.push_back({"ARTICLE II - TERM AND TERMINATION", {}});
    const size_t rights_article = articles.size();
    articles.push_back({"ARTICLE III - GRANT OF RIGHTS", {}});
    const size_t covenant_article = articles.size();
    articles.push_back({"ARTICLE IV - COVENANTS", {}});
    const size_t general_article = articles.size();
    articles.push_back({"ARTICLE V - GENERAL PROVISIONS", {}});

    if (!defs.empty()) {
      int idx = 1;
      for (const auto& d : defs) {
        std::string s;
        if (d.noisy) {
          s = std::to_string(idx) + ". " + d.term + " shall be defined as " + d.body;
        } else {
          static const std::vector<std::string> forms = {
              "\"{T}\" shall mean {BODY}", "\"{T}\" means {BODY}",
              "The term \"{T}\" shall mean {BODY}"};
          s = std::to_string(idx) + ". " +
              substitute(rng.pick(forms), {{"T", d.term}, {"BODY", d.body}});
        }
        articles[0].pieces.push_back({s, -1});
        ++idx;
      }
    }

    auto article_for_type = [&](int type) -> size_t {
      switch (type) {
        case 1:
        case 2: return term_article;
        case 3: return rights_article;
        case 4:
        case 5: return covenant_article;
        case 0: return general_article;
        default: return 1 + static_cast<size_t>(type) % (articles.size() - 1);
      }
    };

    std::vector<std::pair<size_t, Piece>> placed;
    for (const auto& pc : planned)
      placed.emplace_back(article_for_type(pc.type), Piece{render_clause(pc), pc.type});

    // cross-reference lookalikes, planted away from the real clause
    for (const auto& pc : planned) {
      if (!rng.bernoulli(cfg.crossref_fraction)) continue;
      const size_t home = article_for_type(pc.type);
      std::vector<size_t> others;
      for (size_t a = defs.empty() ? 0 : 1; a < articles.size(); ++a)
        if (a != home) others.push_back(a);
      if (others.empty()) continue;
      const size_t target = others[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int>(others.size()) - 1))];
      const std::string label = to_lower(out.type_names[static_cast<size_t>(pc.type)]);
      std::string s = "As provided in " + articles[home].title + ", the " + label +
                      " provisions shall apply to all related obligations arising hereunder";
      bool clash = false;
      for (const auto& g : gold_texts_so_far)
        if (metrics::jaccard(s, g) >= 0.45) clash = true;
      if (!clash) placed.emplace_back(target, Piece{s, -1});
    }

    for (auto& [article, piece] : placed)
      articles[article].pieces.push_back(std::move(piece));

    // filler sentences, a couple per article
    for (size_t a = defs.empty() ? 0 : 1; a < articles.size(); ++a) {
      const int n_fill = rng.uniform_int(2, 3);
      for (int f = 0; f < n_fill; ++f) {
        std::string s = rng.pick(filler_pool());
        if (rng.bernoulli(0.3))
          s = "The " + common_term + " shall be handled as provided herein and " +
              to_lower(s.substr(0, 1)) + s.substr(1);
        const int pos = rng.uniform_int(0, static_cast<int>(articles[a].pieces.size()));
        articles[a].pieces.insert(articles[a].pieces.begin() + pos, {s, -1});
      }
    }

    // assemble text with exact offsets
    std::string text;
    auto append_line = [&](const std::string& line) {
      text += line;
      text += "\n";
    };
    append_line(kind_titles[static_cast<size_t>(kind)]);
    append_line("");
    append_line("AGREEMENT made by and between " + party_a +
                ", a corporation organized under the laws of the State of " +
                rng.pick(state_pool()) + ", and " + party_b + ".");
    append_line("");

    std::map<int, std::vector<CharSpan>> golds_by_type;
    std::vector<std::pair<std::string, std::string>> def_texts;  // term, body as written
    for (size_t a = 0; a < articles.size(); ++a) {
      const int art_start = static_cast<int>(text.size());
      append_line(articles[a].title);
      for (const auto& piece : articles[a].pieces) {
        const int s_start = static_cast<int>(text.size());
        append_line(piece.sentence + ".");
        const int s_end = s_start + static_cast<int>(piece.sentence.size()) + 1;
        if (piece.clause_type >= 0) {
          CharSpan span;
          span.start = s_start;
          span.end = s_end;
          span.text = piece.sentence + ".";
          golds_by_type[piece.clause_type].push_back(span);
        }
      }
      append_line("");
      contract.articles.push_back(
          {articles[a].title, art_start, static_cast<int>(text.size())});
    }
    contract.text = text;

    // gold covers every definition written, including noisy wordings the
    // pattern family cannot recover; noise therefore costs recall
    for (const auto& d : defs) {
      Definition g;
      g.term = d.term;
      g.body = d.body;
      g.contract_id = contract.id;
      const size_t pos = contract.text.find("\"" + d.term + "\"");
      g.char_start = pos == std::string::npos ? 0 : static_cast<int>(pos);
      g.char_end = g.char_start;
      out.gold_definitions.push_back(std::move(g));
    }

    for (int type = 0; type < cfg.n_types; ++type) {
      Example ex;
      ex.id = "ca-" + contract.id + "-t" + std::to_string(type);
      ex.contract_id = contract.id;
      ex.query.task = Task::CA;
      ex.query.text = out.type_names[static_cast<size_t>(type)];
      ex.query.clause_type = type;
      auto it = golds_by_type.find(type);
      if (it != golds_by_type.end()) ex.gold = it->second;
      out.ca_examples.push_back(std::move(ex));
    }
    for (const auto& [type, spans] : golds_by_type)
      for (const auto& span : spans) out.clauses.push_back({contract.id, type, span});

    out.contracts.push_back(std::move(contract));
  }
  return out;
}

}  // namespace conreader
