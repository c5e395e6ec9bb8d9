#pragma once

#include <array>
#include <string>
#include <vector>

#include "factorlab/taskgen/retrieval.hpp"

namespace factorlab::taskgen {

struct BiosOptions {
  int n_people = 1000;
  double query_train_fraction = 0.8;
  uint64_t seed = 1;
};

namespace bios_pools {

inline const std::vector<std::string>& first_names() {
  static const std::vector<std::string> v = {
      "alice",  "bruno",  "carla",  "derek",  "elena",  "felix",  "greta",  "hassan",
      "ingrid", "jonas",  "keiko",  "liam",   "maria",  "nils",   "odile",  "pavel",
      "quinn",  "rosa",   "stefan", "tessa",  "umar",   "vera",   "wilbur", "xenia",
      "yusuf",  "zelda",  "arvid",  "bianca", "cedric", "daphne", "edgar",  "fiona",
      "gustav", "helena", "igor",   "janet",  "kasper", "lydia",  "marco",  "nadia"};
  return v;
}

inline const std::vector<std::string>& last_names() {
  static const std::vector<std::string> v = {
      "ashford",  "bergman",  "castillo", "dunlop",   "eriksen",  "farrow",  "gallardo",
      "holt",     "ivanov",   "jensen",   "kovacs",   "lindqvist", "moretti", "novak",
      "oberman",  "petrov",   "quigley",  "rossi",    "salazar",  "thorne",  "ueda",
      "vance",    "whitfield", "xiong",   "yamada",   "zimmer",   "baxter",  "crowley",
      "drummond", "ellison",  "fontaine", "griffith", "harlow",   "ibarra",  "jarvis",
      "keller",   "lombardi", "mercer",   "norwood",  "osborne"};
  return v;
}

inline const std::vector<std::string>& months() {
  static const std::vector<std::string> v = {"january", "february", "march",     "april",
                                             "may",     "june",     "july",      "august",
                                             "september", "october", "november", "december"};
  return v;
}

inline const std::vector<std::string>& cities() {
  static const std::vector<std::string> v = {
      "brockton", "calderon", "dunmore",  "eastvale", "fairfax",  "glenrock", "harmouth",
      "ironton",  "jasperville", "kentfield", "lakewood", "marlow", "northgate", "oakhurst",
      "pinebrook", "quarry",   "ridgeway", "stonehill", "tamworth", "uplands", "verona",
      "westbrook", "yarrow",   "zephyr",   "ashby",    "birchwood", "cresthill", "dovercourt",
      "elmsworth", "foxglove"};
  return v;
}

inline const std::vector<std::string>& universities() {
  static const std::vector<std::string> v = {
      "northfield", "crestview", "ashbourne", "ridgemont", "silverlake", "oakdale",
      "maplewood",  "brighton",  "kingsford", "lancaster", "redwood",    "harborview",
      "stonebridge", "clearwater", "summit",  "vantage",   "wycliffe",   "belmont",
      "fairmont",   "grandview", "hillcrest", "ivybridge", "jubilee",    "keystone"};
  return v;
}

inline const std::vector<std::string>& majors() {
  static const std::vector<std::string> v = {
      "astronomy",  "biology",   "chemistry",  "drafting",  "economics", "forestry",
      "geology",    "history",   "immunology", "journalism", "kinesiology", "linguistics",
      "mathematics", "neurology", "oceanography", "philosophy", "quantum", "robotics",
      "statistics", "toxicology"};
  return v;
}

inline const std::vector<std::string>& employers() {
  static const std::vector<std::string> v = {
      "acmeworks", "bytecraft", "coreline",  "datasmith", "everfield", "fluxon",
      "gridpoint", "helios",    "ironclad",  "junction",  "kiteworks", "lumina",
      "meridian",  "nimbus",    "omnitech",  "pinnacle",  "quantafor", "rockwell",
      "sentinel",  "tesseract", "umbrella",  "vertex",    "wavecrest", "zenith"};
  return v;
}

inline const std::vector<std::string>& hobbies() {
  static const std::vector<std::string> v = {
      "archery",  "botany",    "chess",     "drumming", "embroidery", "fencing",
      "gardening", "hiking",   "icefishing", "juggling", "kayaking",  "lacrosse",
      "macrame",  "numismatics", "origami", "pottery",  "quilting",  "rowing"};
  return v;
}

}  // namespace bios_pools

/// Biography-style passages for fictional people, one passage per person,
/// six attributes each, three sentence templates per attribute. Full names
/// are unique across the dataset and birth dates are unique per person so
/// the date-to-name direction has a single gold answer.
inline data::QADataset gen_bios(const BiosOptions& opt) {
  using namespace bios_pools;
  require(opt.n_people > 0, "gen_bios: n_people must be positive");

  const int name_combos =
      static_cast<int>(first_names().size()) * static_cast<int>(last_names().size());
  if (opt.n_people > name_combos) {
    fail("gen_bios: name pools exhausted, need ", opt.n_people, " unique names but only ",
         name_combos, " combinations exist");
  }
  const int date_combos = static_cast<int>(months().size()) * 28 * 60;
  if (opt.n_people > date_combos) {
    fail("gen_bios: date space exhausted, need ", opt.n_people, " unique dates but only ",
         date_combos, " exist");
  }

  data::QADataset ds;
  ds.vocab.add(":");
  for (const char* w : {"was", "born", "on", "celebrates", "a", "birthday", "first", "saw",
                        "daylight", "spent", "early", "years", "in", "grew", "up", "comes",
                        "from", "studied", "at", "graduated", "trained", "focused", "majored",
                        "specialized", "works", "for", "joined", "builds", "products", "enjoys",
                        "loves", "relaxes", "with", "."}) {
    ds.vocab.add(w);
  }
  for (const auto& pool : {first_names(), last_names(), months(), cities(), universities(),
                           majors(), employers(), hobbies()}) {
    for (const auto& w : pool) ds.vocab.add(w);
  }
  for (int d = 1; d <= 28; ++d) ds.vocab.add(std::to_string(d));
  for (int y = 1950; y < 2010; ++y) ds.vocab.add(std::to_string(y));

  Rng rng(opt.seed);
  const auto name_picks = rng.split("names").sample_distinct(name_combos, opt.n_people);
  const auto date_picks = rng.split("dates").sample_distinct(date_combos, opt.n_people);
  const auto split = detail::split_assignment(opt.n_people, opt.query_train_fraction,
                                              rng.split("query_split"));
  Rng attr_rng = rng.split("attributes");

  auto tok = [&](const std::string& w) { return ds.vocab.id(w); };

  std::vector<data::TokenSequence> passages, queries;
  for (int p = 0; p < opt.n_people; ++p) {
    const int ni = name_picks[static_cast<size_t>(p)];
    const std::string first = first_names()[static_cast<size_t>(ni / last_names().size())];
    const std::string last = last_names()[static_cast<size_t>(ni % last_names().size())];
    const int di = date_picks[static_cast<size_t>(p)];
    const std::string month = months()[static_cast<size_t>(di % 12)];
    const std::string day = std::to_string(1 + (di / 12) % 28);
    const std::string year = std::to_string(1950 + (di / (12 * 28)) % 60);

    const std::string city = cities()[static_cast<size_t>(attr_rng.next_below(
        static_cast<int>(cities().size())))];
    const std::string uni = universities()[static_cast<size_t>(attr_rng.next_below(
        static_cast<int>(universities().size())))];
    const std::string major = majors()[static_cast<size_t>(attr_rng.next_below(
        static_cast<int>(majors().size())))];
    const std::string employer = employers()[static_cast<size_t>(attr_rng.next_below(
        static_cast<int>(employers().size())))];
    const std::string hobby = hobbies()[static_cast<size_t>(attr_rng.next_below(
        static_cast<int>(hobbies().size())))];

    const std::vector<int> name_tokens = {tok(first), tok(last)};
    const std::vector<int> date_tokens = {tok(month), tok(day), tok(year)};

    data::TokenSequence pass;
    pass.kind = data::RecordKind::statement;
    pass.split = data::Split::train;
    pass.tokens.push_back(data::Vocab::kBos);

    auto add_words = [&](const std::vector<std::string>& ws) {
      for (const auto& w : ws) pass.tokens.push_back(tok(w));
    };
    auto add_name = [&] {
      const int s = static_cast<int>(pass.tokens.size());
      pass.tokens.push_back(tok(first));
      pass.tokens.push_back(tok(last));
      pass.spans.push_back(data::EntitySpan{s, s + 2, data::SpanKind::entity});
    };
    auto add_value = [&](const std::vector<std::string>& ws) {
      const int s = static_cast<int>(pass.tokens.size());
      add_words(ws);
      pass.spans.push_back(
          data::EntitySpan{s, static_cast<int>(pass.tokens.size()), data::SpanKind::value});
    };

    // Each sentence keeps the name before the attribute value, template
    // variant drawn per person and attribute.
    const int t_date = attr_rng.next_below(3);
    add_name();
    if (t_date == 0) add_words({"was", "born", "on"});
    if (t_date == 1) add_words({"celebrates", "a", "birthday", "on"});
    if (t_date == 2) add_words({"first", "saw", "daylight", "on"});
    add_value({month, day, year});
    add_words({"."});

    const int t_city = attr_rng.next_below(3);
    add_name();
    if (t_city == 0) add_words({"spent", "early", "years", "in"});
    if (t_city == 1) add_words({"grew", "up", "in"});
    if (t_city == 2) add_words({"comes", "from"});
    add_value({city});
    add_words({"."});

    const int t_uni = attr_rng.next_below(3);
    add_name();
    if (t_uni == 0) add_words({"studied", "at"});
    if (t_uni == 1) add_words({"graduated", "from"});
    if (t_uni == 2) add_words({"trained", "at"});
    add_value({uni});
    add_words({"."});

    const int t_major = attr_rng.next_below(3);
    add_name();
    if (t_major == 0) add_words({"focused", "on"});
    if (t_major == 1) add_words({"majored", "in"});
    if (t_major == 2) add_words({"specialized", "in"});
    add_value({major});
    add_words({"."});

    const int t_emp = attr_rng.next_below(3);
    add_name();
    if (t_emp == 0) add_words({"works", "for"});
    if (t_emp == 1) add_words({"joined"});
    if (t_emp == 2) add_words({"builds", "products", "at"});
    add_value({employer});
    add_words({"."});

    const int t_hobby = attr_rng.next_below(3);
    add_name();
    if (t_hobby == 0) add_words({"enjoys"});
    if (t_hobby == 1) add_words({"loves"});
    if (t_hobby == 2) add_words({"relaxes", "with"});
    add_value({hobby});
    add_words({"."});

    pass.tokens.push_back(data::Vocab::kEos);
    passages.push_back(std::move(pass));

    queries.push_back(detail::make_query(ds.vocab, true, name_tokens, date_tokens,
                                         split[static_cast<size_t>(p)]));
    queries.push_back(detail::make_query(ds.vocab, false, date_tokens, name_tokens,
                                         split[static_cast<size_t>(p)]));
  }
  for (auto& s : passages) ds.records.push_back(std::move(s));
  for (auto& q : queries) ds.records.push_back(std::move(q));
  ds.validate();
  return ds;
}

}  // namespace factorlab::taskgen
