//! Noun identification: a bundled closed lexicon plus suffix heuristics.

use std::collections::HashSet;
use std::sync::OnceLock;

use super::text::{is_stopword, lemma};

const LEXICON: &str = "
accident account acid actor adult advice affair afternoon age agency agent air aircraft airport
album alcohol alligator amplifier anchor angel anger animal ankle answer ant antelope apartment apple
apricot april apron aquarium arch area arm army arrow art article artist ash astronaut athlete atom
attic audience aunt author autumn avalanche avocado baby backpack bacon badge bag bait baker
bakery balcony ball balloon banana band bank bar barista barn barrel base basket bat bath battery
battle bay beach beam bean bear beard beast bed bee beef beer beetle bell belt bench berry bicycle
bike bill bird birthday biscuit blade blanket blizzard block blood blossom board boat body bone book
boot border bottle bottom bow bowl box boy brain branch brass bread breakfast brick bride bridge
brie brother brownie brush bubble bucket budget bug building bull bullet bunch bunny burger burrow
bus bush butter butterfly button cabin cabinet cable cactus cafe cage cake calf camel camera camp
canal candle candy cannon canoe canvas canyon cap captain car card cargo carpet carriage carrot cart
cartoon case castle cat catnip cave ceiling cell cello cellar century chain chair chalk champion
channel chapter charger cheddar cheek cheese chef cherry chess chest chicken chief child children
chimney chin chocolate chord church cinema circle citizen citrus city class classroom clay cliff
climate climber clock cloth cloud clown club coach coal coast coat cocoa coconut coffee coin
collar college colony color comedy comet company computer concert conductor cookie cork corn corner
cottage cotton couch country court cousin cow crab cracker crater crayon cream creek crew cricket
crop crown crust cub cup cupboard curtain cushion customer dad dairy dam dance dancer dashboard
daughter day deck deer delivery desert desk dessert detective diamond dictionary dinner dinosaur
dish doctor dog doll dollar dolphin donkey door dough dragon drawer dream dress drink driver drizzle
drum duck dust eagle ear earth egg elbow elephant elevator emerald engine engineer eruption espresso
event exhibit eye face factory family farm farmer fashion father feather fence ferry festival
fever fiddle field film fin finger fire fish flag flame flash flock flood floor flour flower flute
fly fog folder food foot football forecast forest fork fortress fossil fountain fox fries frog frost
fruit fuel furniture galaxy game garage garden garlic gate gem ghost giraffe girl glacier glass globe
glove goal goat gold gorilla grain grandfather grandmother grape grass grater greenhouse grill guest
guide guitar gun hair hall halloween hammer hamster hand harbor hare harvest hat hay head heart
helicopter helmet herd highway hill hole holiday home honey hook hops horn horse hose hospital hotel
hour house hunter hurricane ice iceberg idea island ivory jacket jam jar jeans jelly jet jewel
jockey journey judge juice jungle kangaroo keg kettle key keyboard king kitchen kite kitten knee
knife knight ladder lady lager lake lamp land language lantern laptop lava lawn lawyer leaf league
leash leather leg lemon lemonade lens leopard lesson letter library lighthouse lion lip litter
lizard loaf lobster lock lunch machine magazine magnet mailbox man map marble market mask match meadow
meal meat medal melody melon menu metal meteor microphone milk mirror mission mitten moat model money
monkey monster month moon morning mosquito moth mother motor motorcycle mountain mouse mouth movie
mud mug muffin museum mushroom music musician nail napkin neck necklace needle nest net newspaper
night noodle nose notebook novel nurse nut oak ocean octopus office oil onion orbit orchard orchestra
ostrich otter oven owl pack page pail paint painting pajamas palace pan pancake panda paper parade
parent park parrot party passenger pasta patty peach peanut pear pearl pedal peel pen pencil penguin
penalty pepper pepperoni photograph photographer piano pickle picnic pie pig pigeon pillow pilot
pin pint pipe pirate pitch pizza planet plant plate platform player pocket poem police pond pony
popcorn porch portrait post pot potato powder predator prey prince princess prison puddle pumpkin
puppy purse puzzle queen rabbit raccoon race radio railway rain rainbow ranger rat recipe referee
rehearsal reef restaurant ribbon rice riddle rider ring river road robot rock rocket roof room
rooster root rope ruby rug ruler sailor salad salt sand sandwich satellite sauce saucer
sausage savanna scarf school scientist scissors screen seashell season seat seed shadow shark
sheep shelf shell shield ship shirt shoe shop shore shovel shutter sign singer sink sister skate
skeleton ski skirt sky sled slice slipper slope smoke smoothie snack snail snake snow snowman soap
soccer sock sofa software soil soldier son song sonata soup space spider spoon squash squirrel
stable stadium stage stair stamp star station statue steak steel stem stick stone storm story
stove strawberry stream street striker string stripe student studio submarine sugar suit summer sun
sunscreen supper swamp swan sweater symphony syrup table tail tank tea teacher team teapot teeth
telephone telescope temple tent theater thread throat thunder ticket tiger tire toast toaster
toe tomato tongue tool tooth toothbrush topping torch tortoise towel tower town toy track tractor
traffic trail trailer train tree triangle tripod trolley trophy truck truffle trumpet trunk tulip
tunnel turkey turtle umbrella uncle unicorn universe valley van vase vegetable vehicle village
vine vinegar vineyard violin volcano wagon waiter wall wallet walnut wand war wardrobe watch water
waterfall wave wax weather wedding weed whale wheat wheel whisker whistle wick wind window wine wing
winter wire witch wolf woman wood wool worm wrapper yard yarn yogurt zebra zest zoo
baguette bun caffeine cheddar fondue ketchup lemonade trackpad timetable sommelier eruption
ingredient walk bark forest harvest trip tide deadline mile comic series audience ending injury
";

const PERSONS: &str = "
actor astronaut athlete author baker barista bride brother captain chef child climber clown coach
conductor cousin dancer detective doctor driver engineer farmer father fisherman girl boy guide hunter
jockey judge king knight lady lawyer man mother musician nurse passenger photographer pianist pilot
pirate player police prince princess queen ranger referee rider sailor scientist singer sister
soldier sommelier striker student teacher uncle waiter witch woman
";

const PLACES: &str = "
airport bakery beach cafe canyon castle cave church cinema city classroom coast country desert
factory farm forest garden harbor hospital hotel island jungle kitchen lake library market meadow
mountain museum ocean office orchard palace park prison restaurant river school shop shore stadium
station street studio swamp temple theater town valley village vineyard zoo
";

fn lemma_set(words: &str) -> HashSet<String> {
    words.split_whitespace().map(lemma).collect()
}

fn lexicon() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| lemma_set(LEXICON))
}

fn persons() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| lemma_set(PERSONS))
}

fn places() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| lemma_set(PLACES))
}

const NOUN_SUFFIXES: &[&str] = &[
    "tion", "sion", "ment", "ness", "ity", "ism", "ship", "hood", "ance", "ence", "ist", "dom",
];

pub fn is_noun(token: &str) -> bool {
    let lower = token.to_lowercase();
    if lower.is_empty() || is_stopword(&lower) || !lower.chars().all(|c| c.is_alphabetic() || c == '\'' || c == '\u{2019}') {
        return false;
    }
    if lexicon().contains(&lemma(&lower)) {
        return true;
    }
    lower.len() >= 6 && NOUN_SUFFIXES.iter().any(|s| lower.ends_with(s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WhWord {
    What,
    Who,
    Where,
}

impl WhWord {
    pub fn for_noun(token: &str) -> WhWord {
        let l = lemma(token);
        if persons().contains(&l) {
            WhWord::Who
        } else if places().contains(&l) {
            WhWord::Where
        } else {
            WhWord::What
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WhWord::What => "what",
            WhWord::Who => "who",
            WhWord::Where => "where",
        }
    }
}
