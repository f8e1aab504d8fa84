#include <sstream>

#include "therif/core/error.hpp"
#include "therif/render/renderer.hpp"

namespace therif::raster {

namespace {

PassageText build(std::string id, int grade, const std::vector<std::string>& screens, std::vector<Question> questions) {
  PassageText p;
  p.passage_id = std::move(id);
  p.grade_level = grade;
  p.screen_splits.push_back(0);
  for (const auto& s : screens) {
    if (!p.body.empty()) p.body += "\n\n";
    p.body += s;
    p.screen_splits.push_back(p.screen_splits.back() + static_cast<int>(split_words(s).size()));
  }
  p.questions = std::move(questions);
  validate(p);
  return p;
}

}  // namespace

std::vector<std::string> split_words(const std::string& body) {
  std::istringstream in(body);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

std::vector<std::string> screen_words(const PassageText& passage, int screen) {
  if (screen < 0 || screen >= passage.screen_count()) throw Error("screen index out of range");
  const auto words = split_words(passage.body);
  return {words.begin() + passage.screen_splits[screen], words.begin() + passage.screen_splits[screen + 1]};
}

void validate(const PassageText& passage) {
  const int words = static_cast<int>(split_words(passage.body).size());
  if (words == 0) throw Error("passage " + passage.passage_id + " is empty");
  const auto& s = passage.screen_splits;
  if (s.size() < 2 || s.front() != 0 || s.back() != words) {
    throw Error("passage " + passage.passage_id + ": screen splits do not cover the body");
  }
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] <= s[i - 1]) throw Error("passage " + passage.passage_id + ": empty or unordered screen");
  }
  const int expected = passage.grade_level == 8 ? 4 : passage.grade_level == 12 ? 6 : -1;
  if (expected < 0) throw Error("grade level must be 8 or 12");
  if (passage.screen_count() != expected) {
    throw Error("passage " + passage.passage_id + ": grade " + std::to_string(passage.grade_level) + " needs " +
                std::to_string(expected) + " screens");
  }
  for (const auto& q : passage.questions) {
    if (q.answer < 0 || q.answer >= static_cast<int>(q.options.size())) throw Error("question answer out of range");
  }
}

const PassageText& grade8_passage() {
  static const PassageText p = build(
      "lighthouse-g8", 8,
      {"Long before ships carried radios or satellite maps, sailors depended on lighthouses to find their way "
       "along dangerous coasts. A lighthouse is a tall tower with a bright lamp at the top. At night the lamp "
       "shines far out over the water, warning crews about rocks, sandbars, and narrow channels that could tear "
       "open the bottom of a wooden hull.",
       "The earliest lighthouses burned wood or coal in open fires. These fires were hard to keep going in wind "
       "and rain, and their light did not travel very far. Later keepers used oil lamps with polished metal "
       "mirrors behind them. The mirrors gathered the light and pushed it forward in a stronger beam that ships "
       "could see from several miles away.",
       "A great change came when a French engineer designed a new kind of lens. It was built from many rings of "
       "glass arranged like the layers of an onion. Each ring bent the light so that almost none of it was "
       "wasted. With this lens, a single small flame could be seen more than twenty miles out at sea, even on "
       "a hazy night.",
       "Every lighthouse also had its own pattern of flashes, so sailors could tell one tower from another. One "
       "might flash twice every ten seconds while another glowed steadily. Today most lighthouses run "
       "automatically and no longer need a keeper, but many still shine each night, and some have become "
       "museums where visitors climb the winding stairs."},
      {{"What was the main job of a lighthouse?",
        {"To store fishing boats", "To warn sailors about dangers near the coast", "To measure the tides",
         "To send radio messages"},
        1},
       {"Why were open fires a poor source of light?",
        {"They were too bright", "They used too much glass", "They were hard to keep lit in bad weather",
         "They attracted birds"},
        2},
       {"What made the new lens so effective?",
        {"Its rings of glass bent the light so little was wasted", "It was painted red",
         "It burned coal instead of oil", "It turned the flame off during the day"},
        0},
       {"How could sailors tell one lighthouse from another?",
        {"By the height of the tower", "By the color of the stairs", "By the name painted on the wall",
         "By each tower's pattern of flashes"},
        3}});
  return p;
}

const PassageText& grade12_passage() {
  static const PassageText p = build(
      "heat-island-g12", 12,
      {"On a still summer afternoon, the center of a large city can be several degrees warmer than the farmland "
       "that surrounds it. Climatologists call this contrast an urban heat island. The effect is strongest after "
       "sunset, when rural fields release their stored warmth quickly while streets and buildings continue "
       "radiating heat well into the night.",
       "Several mechanisms reinforce one another. Asphalt and dark roofing absorb a large fraction of incoming "
       "sunlight rather than reflecting it. Concrete and brick possess a high thermal mass, so they accumulate "
       "energy during the day and surrender it slowly. Tall buildings also trap outgoing radiation between their "
       "walls, a geometry researchers describe as an urban canyon.",
       "Vegetation ordinarily moderates surface temperatures through evapotranspiration, the process by which "
       "plants draw water from the soil and release it as vapor through their leaves. Converting that liquid "
       "into vapor consumes energy that would otherwise warm the air. Where pavement replaces parks and street "
       "trees, this natural cooling mechanism largely disappears.",
       "Human activity contributes a further increment of heat. Air conditioners expel warmth from interiors "
       "into the street, vehicles convert most of their fuel energy into waste heat, and industrial processes "
       "vent hot exhaust. In dense districts this anthropogenic heat can rival the energy delivered by sunlight "
       "during winter months.",
       "The consequences extend beyond discomfort. Elevated nighttime temperatures deny residents relief during "
       "heat waves, which raises rates of heat-related illness, particularly among elderly people and those "
       "without air conditioning. Warmer conditions also accelerate the chemical reactions that produce "
       "ground-level ozone, degrading air quality across the region.",
       "Municipalities have begun experimenting with countermeasures. Reflective coatings can lower roof "
       "temperatures substantially, permeable pavements allow rainwater to evaporate from beneath the surface, "
       "and ambitious planting programs aim to expand the tree canopy. Evaluating these interventions is "
       "difficult, however, because their benefits vary with climate, building density, and the habits of the "
       "people who live nearby."},
      {{"When is the urban heat island effect typically strongest?",
        {"At dawn in winter", "After sunset", "During heavy rain", "At noon in spring"},
        1},
       {"Why do materials with high thermal mass intensify the effect?",
        {"They reflect most sunlight", "They absorb water from the soil",
         "They store energy by day and release it slowly", "They block wind from reaching the street"},
        2},
       {"According to the passage, how does vegetation cool its surroundings?",
        {"By shading rooftops from the wind", "By releasing water vapor, which consumes energy",
         "By producing ozone", "By absorbing exhaust from vehicles"},
        1},
       {"Why is it hard to evaluate heat island countermeasures?",
        {"Their benefits depend on local climate, density, and behavior", "They are too expensive to install",
         "Cities refuse to share temperature data", "They only work during winter"},
        0}});
  return p;
}

const std::vector<PassageText>& grade8_trial_passages() {
  static const std::vector<PassageText> passages = {
      grade8_passage(),
      build("honeybees-g8", 8,
            {"A honeybee colony can hold tens of thousands of insects, yet it works almost like a single animal. "
             "Each bee has a job, and the jobs change as the bee grows older. Young bees stay inside the hive, "
             "where they clean the wax cells and feed the growing larvae.",
             "After a few weeks, a bee begins to work near the entrance. It guards the hive against wasps and "
             "robber bees from other colonies, and it fans its wings to cool the air inside on hot days. Only "
             "in the last part of its life does a bee leave to gather food.",
             "Forager bees fly from flower to flower collecting nectar and pollen. When a forager finds a rich "
             "patch of flowers, it returns and performs a waggle dance on the comb. The angle of the dance "
             "shows the direction of the flowers, and its length shows how far away they are.",
             "Back in the hive, other bees turn the nectar into honey by adding enzymes and fanning away extra "
             "water. The finished honey is sealed in wax cells and saved for winter, when no flowers bloom and "
             "the whole colony must live on the food it stored during the warm months."},
            {{"What do the youngest bees do?",
              {"Gather nectar", "Clean cells and feed larvae", "Guard the entrance", "Build new hives"},
              1},
             {"Why do bees fan their wings inside the hive?",
              {"To scare away birds", "To dance for other bees", "To cool the air on hot days", "To fly faster"},
              2},
             {"What does the length of the waggle dance show?",
              {"How far away the flowers are", "How many bees should come", "The color of the flowers",
               "The time of day"},
              0},
             {"Why do bees store honey?",
              {"To trade with other colonies", "To attract flowers", "To keep the wax soft",
               "To have food during winter"},
              3}}),
      build("volcano-g8", 8,
            {"Deep under the ground, the rock is so hot that some of it melts into a thick liquid called magma. "
             "Because magma is lighter than the solid rock around it, it slowly rises toward the surface, "
             "collecting in large chambers a few miles below the ground.",
             "When enough pressure builds up in a chamber, the magma forces its way through cracks and bursts "
             "out of the ground. Once it reaches the surface it is called lava. Some eruptions send lava "
             "flowing gently down the slopes, while others explode with great force.",
             "The difference depends mostly on gas and on how sticky the magma is. Runny magma lets gas bubble "
             "out easily, so the lava pours out calmly. Thick, sticky magma traps the gas until the pressure "
             "becomes too great, and then the volcano blasts ash and rock high into the sky.",
             "Scientists watch active volcanoes closely. They measure small earthquakes, check whether the "
             "ground is swelling, and test the gases leaking from vents. These signs do not tell exactly when "
             "an eruption will happen, but they often give people nearby time to move to safety."},
            {{"What is magma called once it reaches the surface?",
              {"Ash", "Lava", "Crystal", "Steam"},
              1},
             {"Why does magma rise toward the surface?",
              {"It is pulled by the moon", "It is lighter than the rock around it", "Rain pushes it up",
               "Animals dig tunnels for it"},
              1},
             {"What kind of magma causes explosive eruptions?",
              {"Runny magma with little gas", "Cold magma", "Thick, sticky magma that traps gas",
               "Magma mixed with water"},
              2},
             {"How do scientists help people near volcanoes?",
              {"By stopping eruptions", "By cooling the lava", "By building walls around vents",
               "By watching warning signs so people can leave in time"},
              3}}),
      build("bicycle-g8", 8,
            {"The first bicycles, built about two hundred years ago, had no pedals at all. Riders sat on a "
             "wooden frame and pushed along the road with their feet, gliding a short distance between each "
             "push. These machines were fun, but they were heavy and hard to steer.",
             "Later inventors added pedals to the front wheel. To go faster, they made that wheel larger and "
             "larger, until some bicycles had front wheels taller than a grown man. These high wheelers were "
             "quick, but a sudden stop could throw the rider over the handlebars.",
             "The safety bicycle solved this problem. It had two wheels of the same size and a chain that "
             "connected the pedals to the back wheel. Riders sat lower and could put their feet on the ground, "
             "so falls were far less dangerous. Air-filled rubber tires soon made the ride smoother too.",
             "The safety bicycle changed daily life. Workers could live farther from their jobs, and many "
             "people traveled beyond their own towns for the first time. Its basic design was so successful "
             "that most bicycles built today still look very much like it."},
            {{"How did riders move the earliest bicycles?",
              {"By pushing along the ground with their feet", "By turning a crank", "With a small engine",
               "By pulling a rope"},
              0},
             {"What was dangerous about high wheelers?",
              {"They had no seat", "A sudden stop could throw the rider forward", "The tires often burst",
               "They could not turn left"},
              1},
             {"What connected the pedals to the back wheel on the safety bicycle?",
              {"A belt", "A spring", "A chain", "A rod"},
              2},
             {"How did the safety bicycle change daily life?",
              {"It replaced all trains", "It made roads shorter", "It ended the need for shoes",
               "People could live farther from work and travel more"},
              3}}),
  };
  return passages;
}

std::vector<PassageText> builtin_passages() { return {grade8_passage(), grade12_passage()}; }

}  // namespace therif::raster
