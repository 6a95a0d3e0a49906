//! Built-in entity lexicons and sentence templates for the synthetic corpus.
//!
//! Every name list is split deterministically: each fifth entry goes to the
//! held-out lexicon used for unseen-entity test sets, the rest to the
//! training lexicon. The out-of-domain lexicon is a separate fantasy-chronicle
//! vocabulary that shares no entity with either.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Entity surface forms per entity type. Multi-token entities are written
/// with single spaces between tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lexicon(pub BTreeMap<String, Vec<String>>);

impl Lexicon {
    pub fn entries(&self, entity_type: &str) -> &[String] {
        self.0.get(entity_type).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn all_entries(&self) -> impl Iterator<Item = &String> {
        self.0.values().flatten()
    }
}

const FIRST_NAMES: &[&str] = &[
    "John", "Maria", "Peter", "Anna", "David", "Elena", "Michael", "Sofia", "Thomas", "Laura",
    "James", "Clara", "Robert", "Ingrid", "Daniel", "Fatima", "Carlos", "Yuki", "Ahmed", "Olga",
    "Pierre", "Helga", "Marco", "Akira", "Stefan", "Lucia", "Ivan", "Greta", "Pablo", "Nadia",
    "Hans", "Chloe", "Rahul", "Mei", "Omar", "Astrid", "Luis", "Keiko", "Viktor", "Beatriz",
    "Samuel", "Irina", "George", "Amara", "Felix", "Leila", "Oscar", "Hanna", "Tariq", "Rosa",
    "Martin", "Ayumi", "Jorge", "Sabine", "Kofi", "Marta", "Andrei", "Priya", "Henrik", "Lena",
    "Mateo", "Zara", "Igor", "Emma", "Kenji", "Paula", "Dmitri", "Noor", "Lars", "Alicia",
    "Bruno", "Sanna", "Emil", "Wanjiru", "Tomas", "Ines", "Rafael", "Mira", "Nikolai", "Julia",
];

const SURNAMES: &[&str] = &[
    "Smith", "Garcia", "Muller", "Rossi", "Tanaka", "Kowalski", "Johnson", "Novak", "Dubois", "Silva",
    "Petrov", "Jensen", "Brown", "Schmidt", "Moreau", "Santos", "Ivanova", "Nielsen", "Wilson", "Weber",
    "Laurent", "Costa", "Sokolov", "Hansen", "Taylor", "Fischer", "Bernard", "Pereira", "Volkov", "Larsen",
    "Clarke", "Wagner", "Lefebvre", "Oliveira", "Popov", "Andersen", "Walker", "Becker", "Girard", "Almeida",
    "Kuznetsov", "Pedersen", "Wright", "Hoffmann", "Fontaine", "Ribeiro", "Morozov", "Eriksen", "Hughes", "Schulz",
    "Mercier", "Carvalho", "Lebedev", "Olsen", "Evans", "Koch", "Dupont", "Gomes", "Kozlov", "Holm",
    "Baker", "Richter", "Lambert", "Martins", "Novikov", "Berg", "Turner", "Klein", "Rousseau", "Lopes",
    "Fedorov", "Lund", "Phillips", "Wolf", "Vincent", "Barbosa", "Orlov", "Dahl", "Campbell", "Neumann",
];

const LOCATIONS: &[&str] = &[
    "Paris", "Berlin", "Madrid", "Rome", "Tokyo", "Cairo", "Lima", "Oslo", "Vienna", "Prague",
    "Brazil", "Germany", "France", "Japan", "Kenya", "Canada", "Mexico", "Norway", "Egypt", "Chile",
    "London", "Moscow", "Dublin", "Athens", "Lisbon", "Warsaw", "Seoul", "Nairobi", "Sydney", "Toronto",
    "Spain", "Italy", "Poland", "Sweden", "India", "China", "Peru", "Greece", "Turkey", "Austria",
    "Geneva", "Zurich", "Munich", "Milan", "Osaka", "Delhi", "Lagos", "Quito", "Havana", "Manila",
    "Portugal", "Denmark", "Finland", "Ireland", "Nigeria", "Ghana", "Vietnam", "Thailand", "Cuba", "Iran",
    "Hamburg", "Naples", "Porto", "Krakow", "Bergen", "Lyon", "Seville", "Kyoto", "Mumbai", "Casablanca",
    "Belgium", "Hungary", "Romania", "Croatia", "Serbia", "Ukraine", "Morocco", "Algeria", "Bolivia", "Uruguay",
];

const ORG_HEADS: &[&str] = &[
    "Acme", "Globex", "Initech", "Vertex", "Nordic", "Atlas", "Pioneer", "Summit", "Horizon", "Keystone",
    "Meridian", "Crescent", "Falcon", "Sterling", "Orion", "Apex", "Beacon", "Harbor", "Cobalt", "Granite",
    "Pinnacle", "Evergreen", "Redwood", "Silverline", "Northstar", "Bluewater", "Ironclad", "Lighthouse", "Maple", "Quantum",
    "Sapphire", "Titan", "Unity", "Vanguard", "Westfield", "Zenith", "Aurora", "Cascade", "Delta", "Eagle",
    "Frontier", "Galaxy", "Heritage", "Imperial", "Jubilee", "Kingston", "Liberty", "Monarch", "Neptune", "Olympus",
];

const ORG_SUFFIXES: &[&str] = &[
    "Corp", "Bank", "Group", "Airlines", "Motors", "Energy", "Holdings", "Telecom", "Insurance", "Industries",
];

const NATIONALITIES: &[&str] = &[
    "German", "French", "Spanish", "Italian", "Japanese", "Brazilian", "Kenyan", "Canadian", "Mexican", "Norwegian",
    "Egyptian", "Chilean", "British", "Russian", "Irish", "Greek", "Polish", "Swedish", "Indian", "Chinese",
    "Peruvian", "Turkish", "Austrian", "Swiss", "Danish", "Finnish", "Nigerian", "Vietnamese", "Cuban", "Iranian",
    "Belgian", "Hungarian", "Romanian", "Croatian", "Serbian", "Ukrainian", "Moroccan", "Korean", "Dutch", "Czech",
];

const EVENT_NAMES: &[&str] = &[
    "World Cup", "Olympic Games", "Grand Prix", "Davis Cup", "Golden Globe", "Champions League", "Super Bowl",
    "Euro Championship", "Asian Games", "Copa America", "Nobel Prize", "Tour de France", "Masters Cup", "Ryder Cup",
    "Commonwealth Games",
];

/// News-style templates. Slots are written `{PER}`, `{LOC}`, `{ORG}`, `{MISC}`;
/// `{A|B}` draws the slot type uniformly from the alternatives.
pub(crate) const ID_TEMPLATES: &[&str] = &[
    "{PER|ORG} said on Tuesday that the deal was closed .",
    "{PER} told reporters in {LOC} that talks would resume next week .",
    "{ORG} said on Monday its profit rose in the third quarter .",
    "Shares of {ORG} fell 3 percent in early trading .",
    "{LOC|ORG} beat {LOC|ORG} 2 - 1 on Sunday .",
    "{PER} , a spokesman for {ORG} , declined to comment .",
    "Police in {LOC} arrested two men on Friday .",
    "{PER} won the {MISC} title after a long match .",
    "The talks between {ORG} and {ORG} ended without agreement .",
    "{LOC} and {LOC} signed a trade agreement on Wednesday .",
    "The {MISC} government said it would raise taxes .",
    "{PER} scored twice as the home side won easily .",
    "Officials from {ORG} met in {LOC} to discuss the plan .",
    "{PER} will travel to {LOC} next month , the ministry said .",
    "The minister said {ORG} had agreed to the terms .",
    "Rain delayed the start of the {MISC} in {LOC} .",
    "{PER} beat {PER} in straight sets .",
    "Analysts expect {ORG} to report higher sales .",
    "The {MISC} market closed higher on Thursday .",
    "{PER} , who joined {ORG} last year , resigned .",
    "Thousands of people marched in {LOC} on Saturday .",
    "The company is based in {LOC} and employs 500 people .",
    "{PER|ORG} said the result was a surprise .",
    "Fans of {ORG|LOC} celebrated late into the night .",
    "A court in {LOC} fined {ORG|PER} for breaking the rules .",
    "{PER} met {PER} at the summit .",
    "The report was published by {ORG|PER} on Friday .",
    "{LOC} will host the {MISC} next year .",
    "Prices rose sharply in {LOC} last month .",
    "{PER} was named coach of {LOC|ORG} .",
    "The {MISC} delegation arrived on Monday .",
    "{ORG|PER} agreed to buy a stake in {ORG} .",
    "Heavy snow closed roads across {LOC} .",
    "{PER} told the newspaper that he would stay .",
    "The central bank kept interest rates unchanged .",
    "Markets were quiet ahead of the holiday .",
    "Officials said the figures were in line with forecasts .",
    "The central bank in {LOC} kept interest rates unchanged for a third month .",
    "Markets in {LOC} were quiet ahead of the long holiday weekend .",
    "The committee at {ORG} will meet again next week to review the proposal .",
    "Results from {ORG} are expected later this month , a source said .",
    "The weather in {LOC} improved after a week of heavy rain and strong wind .",
    "Trading volume was light in the afternoon session as {MISC} investors waited .",
    "It was not clear when the new rules would take effect , {PER} said .",
    "Local officials in {LOC} said the damage was worse than first thought .",
    "The statement from {ORG} gave no details of the new price .",
    "Both sides said they hoped to reach a final deal before the end of the year , according to {PER} .",
    "Several {MISC} officials were expected to attend the ceremony on Saturday .",
];

/// Chronicle-style templates for the out-of-domain set.
pub(crate) const OOD_TEMPLATES: &[&str] = &[
    "In the age of legends , {PER} rode north to {LOC} .",
    "The sorcerer {PER} swore an oath before the {ORG} .",
    "Songs of the {MISC} folk are still sung in {LOC} .",
    "{PER} claimed the throne of {LOC} after the long winter .",
    "The banners of the {ORG} were raised over {LOC} .",
    "Legend says {PER} forged the blade beneath {LOC} .",
    "Envoys of the {ORG} carried word to {PER} .",
    "The {MISC} pilgrims crossed the mountains at dawn .",
    "{PER} and {PER} fought beside the river for three days .",
    "Under the twin moons , the {ORG} gathered in secret .",
    "The chronicles record that {LOC} burned twice .",
    "A {MISC} bard sang of {PER} and the lost crown .",
    "Beyond the mist lay the ruins of {LOC} .",
    "The old songs tell of dragons sleeping under the hills .",
    "Night fell over the silent forest .",
    "The wanderers rested by the fire until dawn , and in the morning they set out for {LOC} .",
    "Few returned from the long march through the frozen wastes beyond {LOC} .",
    "It is written that the old king gave his ring to {PER} on the last night of the siege .",
    "No traveller had crossed the grey pass since the fall of the {ORG} .",
    "Many years later the children of the valley still sang the {MISC} hymn at every harvest .",
    "When the bells rang at midnight , the gates of {LOC} were opened for the first time in an age .",
    "The keepers of the tower said that {PER} had never truly died .",
    "Some say the dark stones of {LOC} still remember the voices of the dead .",
];

const FANTASY_PREFIXES: &[&str] = &[
    "Ael", "Bry", "Cael", "Dor", "Eld", "Fen", "Gal", "Hal", "Ith", "Jor", "Kael", "Lor", "Mor", "Nym", "Ost",
    "Pyr", "Quel", "Ryn", "Syl", "Thal", "Ul", "Vael", "Wyr", "Xan", "Yr", "Zeph",
];

const FANTASY_SUFFIXES_PER: &[&str] = &["wyn", "drin", "thas", "mira", "gorn", "liel", "vash", "rith"];
const FANTASY_SUFFIXES_LOC: &[&str] = &["mere", "hold", "fell", "gard", "moor", "spire", "vale", "reach"];
const FANTASY_ORG: &[&str] = &[
    "Order", "Circle", "Conclave", "Brotherhood", "Covenant", "Wardens", "Council", "Guild",
];
const FANTASY_ORG_OF: &[&str] = &["Ash", "Dawn", "Thorns", "Embers", "Frost", "Ravens", "Stars", "Tides"];
const FANTASY_SUFFIXES_MISC: &[&str] = &["ari", "eni", "oth", "ish"];

const TAIL_ONSETS: &[&str] = &[
    "Bar", "Kes", "Dun", "Sel", "Ric", "Tor", "Ven", "Lin", "Mar", "Cor", "Gre", "Wal", "Bren", "Hol", "Pel",
    "Stan",
];
const TAIL_VOWELS: &[&str] = &["a", "e", "i", "o"];
const TAIL_SURNAME_ENDINGS: &[&str] = &["son", "mann", "sky", "nez", "rov", "ker", "lli", "gard"];
const TAIL_PLACE_ENDINGS: &[&str] = &["berg", "ton", "ville", "dorf", "ford", "mont", "stad", "field"];

/// Rare names built from syllables, ordered so consecutive entries differ in
/// their first syllable.
fn tail_names(endings: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    for e in endings {
        for v in TAIL_VOWELS {
            for o in TAIL_ONSETS {
                out.push(format!("{o}{v}{e}"));
            }
        }
    }
    out
}

fn split_held_out<T: Clone>(items: &[T]) -> (Vec<T>, Vec<T>) {
    let mut train = Vec::new();
    let mut held_out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        if i % 5 == 4 {
            held_out.push(item.clone());
        } else {
            train.push(item.clone());
        }
    }
    (train, held_out)
}

fn person_entries(first: &[&str], last: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, f) in first.iter().enumerate() {
        out.push(format!("{f} {}", last[(i * 7 + 3) % last.len()]));
    }
    for (i, l) in last.iter().enumerate() {
        if i % 2 == 0 {
            out.push((*l).to_string());
        } else {
            out.push(format!("{} {l}", first[(i * 3 + 1) % first.len()]));
        }
    }
    out
}

fn org_entries(heads: &[&str]) -> Vec<String> {
    heads
        .iter()
        .enumerate()
        .map(|(i, h)| {
            if i % 3 == 0 {
                (*h).to_string()
            } else {
                format!("{h} {}", ORG_SUFFIXES[i % ORG_SUFFIXES.len()])
            }
        })
        .collect()
}

fn tail_people(first: &[&str], surnames: &[String]) -> Vec<String> {
    surnames
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i % 2 == 0 {
                format!("{} {s}", first[(i * 5 + 2) % first.len()])
            } else {
                s.clone()
            }
        })
        .collect()
}

/// Companies named after small towns; the town itself stays a location.
fn tail_orgs(places: &[String]) -> Vec<String> {
    places
        .iter()
        .enumerate()
        .filter(|(i, _)| i % 3 == 1)
        .map(|(i, p)| format!("{p} {}", ORG_SUFFIXES[i % ORG_SUFFIXES.len()]))
        .collect()
}

fn build(per: Vec<String>, loc: Vec<String>, org: Vec<String>, misc: Vec<String>) -> Lexicon {
    let mut map = BTreeMap::new();
    map.insert("PER".to_string(), per);
    map.insert("LOC".to_string(), loc);
    map.insert("ORG".to_string(), org);
    map.insert("MISC".to_string(), misc);
    Lexicon(map)
}

fn owned(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Default `(train, held_out)` news-domain lexicons.
pub fn default_id_lexicons() -> (Lexicon, Lexicon) {
    let (first_tr, first_ho) = split_held_out(FIRST_NAMES);
    let (last_tr, last_ho) = split_held_out(SURNAMES);
    let (loc_tr, loc_ho) = split_held_out(LOCATIONS);
    let (org_tr, org_ho) = split_held_out(ORG_HEADS);
    let (nat_tr, nat_ho) = split_held_out(NATIONALITIES);
    let (ev_tr, ev_ho) = split_held_out(EVENT_NAMES);

    // Sports clubs named after their city, as in news text.
    let mut org_tr = org_entries(&org_tr);
    org_tr.extend(loc_tr.iter().step_by(4).map(|s| s.to_string()));
    let mut org_ho = org_entries(&org_ho);
    org_ho.extend(loc_ho.iter().step_by(4).map(|s| s.to_string()));

    // Long tail of rare names behind the frequent head entries.
    let (sur_tail_tr, sur_tail_ho) = split_held_out(&tail_names(TAIL_SURNAME_ENDINGS));
    let (place_tail_tr, place_tail_ho) = split_held_out(&tail_names(TAIL_PLACE_ENDINGS));
    let mut per_tr = person_entries(&first_tr, &last_tr);
    per_tr.extend(tail_people(&first_tr, &sur_tail_tr));
    let mut per_ho = person_entries(&first_ho, &last_ho);
    per_ho.extend(tail_people(&first_ho, &sur_tail_ho));
    let mut loc_tr = owned(&loc_tr);
    let mut loc_ho = owned(&loc_ho);
    org_tr.extend(tail_orgs(&place_tail_tr));
    org_ho.extend(tail_orgs(&place_tail_ho));
    loc_tr.extend(place_tail_tr.iter().cloned());
    loc_ho.extend(place_tail_ho.iter().cloned());

    let mut misc_tr = owned(&nat_tr);
    misc_tr.extend(owned(&ev_tr));
    let mut misc_ho = owned(&nat_ho);
    misc_ho.extend(owned(&ev_ho));

    let train = build(per_tr, loc_tr, org_tr, misc_tr);
    let held_out = build(per_ho, loc_ho, org_ho, misc_ho);
    (train, held_out)
}

/// Default out-of-domain lexicon.
pub fn default_ood_lexicon() -> Lexicon {
    let mut per = Vec::new();
    let mut loc = Vec::new();
    let mut misc = Vec::new();
    for (i, p) in FANTASY_PREFIXES.iter().enumerate() {
        let s = FANTASY_SUFFIXES_PER[i % FANTASY_SUFFIXES_PER.len()];
        let t = FANTASY_SUFFIXES_PER[(i + 3) % FANTASY_SUFFIXES_PER.len()];
        let other = FANTASY_PREFIXES[(i * 5 + 2) % FANTASY_PREFIXES.len()];
        per.push(format!("{p}{s}"));
        per.push(format!("{p}{t} {other}{s}"));
        loc.push(format!("{p}{}", FANTASY_SUFFIXES_LOC[i % FANTASY_SUFFIXES_LOC.len()]));
        misc.push(format!("{p}{}", FANTASY_SUFFIXES_MISC[i % FANTASY_SUFFIXES_MISC.len()]));
    }
    let mut org = Vec::new();
    for (i, o) in FANTASY_ORG.iter().enumerate() {
        for (j, of) in FANTASY_ORG_OF.iter().enumerate() {
            if (i + j) % 3 == 0 {
                org.push(format!("{o} of {of}"));
            }
        }
    }
    build(per, loc, org, misc)
}

pub fn default_id_templates() -> Vec<String> {
    owned(ID_TEMPLATES)
}

pub fn default_ood_templates() -> Vec<String> {
    owned(OOD_TEMPLATES)
}
