"""Synthetic clinical notes with exact gold PHI offsets.

Notes are assembled from template sentences; PHI slots are filled from small
value generators and every inserted value is recorded as a gold span, so
offsets are correct by construction.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import AnnotatedRecord, GoldSpan
from .exceptions import InvalidConfig
from .labels import PHI_LABELS, NormalizedLabel, PhiCategory

# slot name -> (category, subtype) written into the gold annotation
_SLOT_CATEGORY = {
    "PATIENT": ("NAME", "PATIENT"),
    "DOCTOR": ("NAME", "DOCTOR"),
    "USERNAME": ("NAME", "USERNAME"),
    "PROFESSION": ("PROFESSION", None),
    "HOSPITAL": ("LOCATION", "HOSPITAL"),
    "ORGANIZATION": ("LOCATION", "ORGANIZATION"),
    "STREET": ("LOCATION", "STREET"),
    "CITY": ("LOCATION", "CITY"),
    "STATE": ("LOCATION", "STATE"),
    "COUNTRY": ("LOCATION", "COUNTRY"),
    "ZIP": ("LOCATION", "ZIP"),
    "LOCOTHER": ("LOCATION", "OTHER"),
    "AGE": ("AGE", None),
    "DATE": ("DATE", None),
    "PHONE": ("CONTACT", "PHONE"),
    "FAX": ("CONTACT", "FAX"),
    "EMAIL": ("CONTACT", "EMAIL"),
    "URL": ("CONTACT", "URL"),
    "IPADDRESS": ("CONTACT", "IPADDRESS"),
    "SSN": ("ID", "SSN"),
    "MRN": ("ID", "MRN"),
    "HEALTHPLAN": ("ID", "HEALTHPLAN"),
    "ACCOUNT": ("ID", "ACCOUNT"),
    "LICENSE": ("ID", "LICENSE"),
    "DEVICE": ("ID", "DEVICE"),
}

FIRST_NAMES = """James Mary Robert Patricia John Jennifer Michael Linda David Elizabeth
William Barbara Richard Susan Joseph Jessica Thomas Sarah Charles Karen Christopher
Lisa Daniel Nancy Matthew Betty Anthony Sandra Mark Margaret Donald Ashley Steven
Kimberly Paul Emily Andrew Donna Joshua Michelle Kenneth Carol Kevin Amanda Brian
Melissa George Deborah Timothy Stephanie Ronald Rebecca Edward Sharon Jason Laura
Jeffrey Cynthia Ryan Kathleen Jacob Amy Gary Angela Nicholas Shirley Eric Anna
Jonathan Brenda Stephen Pamela Larry Emma Justin Nicole Scott Helen Brandon Samantha
Benjamin Katherine Samuel Christine Gregory Debra Alexander Rachel Frank Carolyn
Raymond Janet Patrick Maria Jack Heather Dennis Diane Jerry Ruth Tyler Julie Aaron
Olivia Jose Joyce Adam Virginia Nathan Victoria Henry Kelly Zachary Lauren Douglas
Christina Peter Joan Kyle Evelyn Noah Judith Ethan Megan Jeremy Andrea Walter Cheryl
Christian Hannah Keith Jacqueline Roger Martha Terry Gloria Austin Teresa Sean Ann
Gerald Sara Carl Madison Harold Frances Dylan Kathryn Arthur Janice Lawrence Jean
Jordan Abigail Jesse Alice Bryan Judy Billy Sophia Bruce Grace Gabriel Denise Joe
Logan Amber Alan Doris Juan Marilyn Albert Danielle Willie Beverly Elijah Isabella
Wayne Theresa Randy Diana Vincent Natalie Mason Brittany Roy Charlotte Ralph Marie
Bobby Kayla Russell Alexis Bradley Lori Priya Rahul Wei Mei Hiroshi Yuki Omar Fatima
Ahmed Leila Carlos Lucia Mateo Sofia Dmitri Olga Kwame Amara Ravi Anjali""".split()

LAST_NAMES = """Smith Johnson Williams Brown Jones Garcia Miller Davis Rodriguez Martinez
Hernandez Lopez Gonzalez Wilson Anderson Thomas Taylor Moore Jackson Martin Lee Perez
Thompson White Harris Sanchez Clark Ramirez Lewis Robinson Walker Young Allen King
Wright Scott Torres Nguyen Hill Flores Green Adams Nelson Baker Hall Rivera Campbell
Mitchell Carter Roberts Gomez Phillips Evans Turner Diaz Parker Cruz Edwards Collins
Reyes Stewart Morris Morales Murphy Cook Rogers Gutierrez Ortiz Morgan Cooper Peterson
Bailey Reed Kelly Howard Ramos Kim Cox Ward Richardson Watson Brooks Chavez Wood James
Bennett Gray Mendoza Ruiz Hughes Price Alvarez Castillo Sanders Patel Myers Long Ross
Foster Jimenez Powell Jenkins Perry Russell Sullivan Bell Coleman Butler Henderson
Barnes Gonzales Fisher Vasquez Simmons Romero Jordan Patterson Alexander Hamilton
Graham Reynolds Griffin Wallace Moreno West Cole Hayes Bryant Herrera Gibson Ellis
Tran Medina Aguilar Stevens Murray Ford Castro Marshall Owens Harrison Fernandez
McDonald Woods Washington Kennedy Wells Vargas Henry Chen Freeman Webb Tucker Guzman
Burns Crawford Olson Simpson Porter Hunter Gordon Mendez Silva Shaw Snyder Mason Dixon
Munoz Hunt Hicks Holmes Palmer Wagner Black Robertson Boyd Rose Stone Salazar Fox
Warren Mills Meyer Rice Schmidt Garza Daniels Ferguson Nichols Stephens Soto Weaver
Ryan Gardner Payne Grant Dunn Kelley Spencer Hawkins Arnold Pierce Hansen Peters
Santos Hart Bradley Knight Elliott Cunningham Duncan Armstrong Hudson Carroll Lane
Riley Andrews Ray Berry Perkins Hoffman Johnston Matthews Pena Richards Contreras
Willis Carpenter Lawrence Sandoval OBrien Kowalski Nakamura Okafor Singh Gupta Ivanova
Haddad Lindqvist Moretti Dubois Novak Yamamoto Mensah""".split()

CITIES = """Boston Cambridge Worcester Springfield Lowell Brockton Quincy Lynn Newton
Somerville Framingham Haverhill Waltham Malden Medford Taunton Chicopee Weymouth
Revere Peabody Methuen Barnstable Pittsfield Attleboro Arlington Everett Salem Westfield
Leominster Fitchburg Beverly Holyoke Marlborough Woburn Chelsea Braintree Shrewsbury
Dartmouth Chelmsford Andover Natick Randolph Watertown Franklin Lexington Burlington
Providence Hartford Albany Portland Denver Phoenix Houston Dallas Austin Atlanta Miami
Seattle Chicago Detroit Baltimore Richmond Nashville Memphis Louisville Omaha Tulsa
Columbus Cleveland Pittsburgh Philadelphia Buffalo Rochester Syracuse Trenton Newark""".split()
CITIES += ["New York", "San Diego", "Los Angeles", "San Francisco", "Salt Lake City",
           "Kansas City", "New Haven", "Fall River", "New Bedford", "North Andover"]

STATES = """Massachusetts Connecticut Vermont Maine Ohio Texas Florida Georgia California
Oregon Washington Colorado Arizona Nevada Michigan Illinois Indiana Kentucky Tennessee
Virginia Maryland Delaware Pennsylvania Alabama Louisiana Minnesota Wisconsin Iowa""".split()
STATES += ["New Hampshire", "Rhode Island", "New York", "New Jersey", "North Carolina",
           "South Carolina", "MA", "NH", "RI", "CT", "NY", "CA", "TX", "FL"]

COUNTRIES = """Canada Mexico Brazil Argentina Ireland England Scotland France Germany Italy
Spain Portugal Poland Russia Ukraine Greece Turkey Egypt Nigeria Ghana Kenya Ethiopia
India Pakistan China Japan Korea Vietnam Philippines Haiti Jamaica Cuba Colombia Peru
Australia Sweden Norway Lebanon Iran Israel""".split()
COUNTRIES += ["the Dominican Republic", "El Salvador", "Puerto Rico", "South Africa"]

LOC_OTHER = ["Cape Cod", "Lake Tahoe", "Yellowstone", "Martha's Vineyard", "Fenway Park",
             "Walden Pond", "Mount Washington", "Nantucket", "the Berkshires",
             "Grand Canyon", "Disney World", "Niagara Falls", "Acadia", "Logan Airport"]

STREET_NAMES = """Main Oak Maple Pine Cedar Elm Washington Lake Hill Park Beacon Tremont
Huntington Commonwealth Centre Highland Prospect Pleasant Summer Winter Spring Chestnut
Walnut Cherry Broad Water Church School Mill Union Franklin Lincoln Jefferson""".split()
STREET_SUFFIXES = ["Street", "St", "Avenue", "Ave", "Road", "Rd", "Drive", "Lane", "Way",
                   "Boulevard", "Court", "Place", "Terrace"]

HOSPITAL_PATTERNS = ["{last} Memorial Hospital", "{city} General Hospital",
                     "{last} Medical Center", "Mercy Hospital", "{city} Community Hospital",
                     "St. {first} Hospital", "{last} Clinic", "{city} Rehabilitation Center",
                     "Good Samaritan Hospital", "{last} Cancer Institute"]
ORG_PATTERNS = ["{last} Industries", "{last} and Sons", "{city} Public Schools",
                "{last} Logistics", "Stop and Shop", "Home Depot", "{city} Fire Department",
                "{last} Insurance", "Raytheon", "Fidelity", "the {city} Police Department",
                "{last} Construction"]

PROFESSIONS = ["nurse", "teacher", "electrician", "accountant", "truck driver", "carpenter",
               "engineer", "lawyer", "firefighter", "police officer", "plumber", "chef",
               "software developer", "mail carrier", "pharmacist", "machinist",
               "bus driver", "cashier", "librarian", "mechanic", "social worker",
               "construction worker", "farmer", "dental hygienist", "waitress"]

MONTHS = ["January", "February", "March", "April", "May", "June", "July", "August",
          "September", "October", "November", "December"]
MONTHS_SHORT = ["Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]

DOMAINS = ["gmail.com", "yahoo.com", "hotmail.com", "partners.org", "bwh.harvard.edu",
           "comcast.net", "aol.com", "mgh.org", "verizon.net", "outlook.com"]
WEB_WORDS = ["healthportal", "mychart", "patientgateway", "clinicnotes", "carelink",
             "medrecords", "wellness", "cardiology", "familypractice", "renalcare"]


# Templates. {SLOT} marks PHI; ``{{`` is never used.
TEMPLATES = {
    NormalizedLabel.NAME: [
        "{PATIENT} is a pleasant patient seen today in clinic.",
        "Mr. {PATIENT} returns for follow up of his hypertension.",
        "Ms. {PATIENT} presents with worsening shortness of breath.",
        "Mrs. {PATIENT} was admitted for chest pain.",
        "Patient {PATIENT} reports good adherence to medications.",
        "Seen with Dr. {DOCTOR} who agrees with the plan.",
        "Dictated by {DOCTOR}, MD.",
        "Referred by Dr. {DOCTOR} for cardiology evaluation.",
        "I discussed the case with {DOCTOR} from nephrology.",
        "{PATIENT} denies fevers, chills or night sweats.",
        "Her daughter {PATIENT} accompanied her to the visit.",
        "Electronically signed by {DOCTOR} on {DATE}.",
        "Login {USERNAME} was used to access the portal.",
        "Attending physician: {DOCTOR}",
        "Patient name: {PATIENT}",
        "The patient, {PATIENT}, was counseled on smoking cessation.",
    ],
    NormalizedLabel.PROFESSION: [
        "He works as a {PROFESSION} and is on his feet all day.",
        "She is a retired {PROFESSION}.",
        "Occupation: {PROFESSION}",
        "He was employed as a {PROFESSION} until last year.",
        "Her husband is a {PROFESSION} and helps with her care.",
    ],
    NormalizedLabel.ORG: [
        "She was transferred from {HOSPITAL} for further management.",
        "Prior records from {HOSPITAL} were reviewed.",
        "He underwent cardiac catheterization at {HOSPITAL} in {DATE}.",
        "He works at {ORGANIZATION} in the warehouse.",
        "She is employed by {ORGANIZATION}.",
        "Follow up arranged at {HOSPITAL} cardiology clinic.",
        "Admitted to {HOSPITAL} on {DATE} with pneumonia.",
    ],
    NormalizedLabel.STREET: [
        "She lives at {STREET} with her husband.",
        "Home address: {STREET}, {CITY}, {STATE} {ZIP}",
        "He recently moved to an apartment on {STREET}.",
        "Mailing address is {STREET} in {CITY}.",
    ],
    NormalizedLabel.CITY: [
        "He lives alone in {CITY}.",
        "She recently returned from a trip to {CITY}.",
        "The patient grew up in {CITY} and moved here in {DATE}.",
        "He drives from {CITY} for his appointments.",
        "Family lives in {CITY}, {STATE}.",
    ],
    NormalizedLabel.STATE: [
        "She moved here from {STATE} two years ago.",
        "He spent the winter in {STATE} with his son.",
        "Her prior endocrinologist practiced in {STATE}.",
    ],
    NormalizedLabel.COUNTRY: [
        "He immigrated from {COUNTRY} in {DATE}.",
        "She traveled to {COUNTRY} last month and had diarrhea on return.",
        "Born in {COUNTRY}, he speaks some English.",
        "Recent travel to {COUNTRY} was noted.",
    ],
    NormalizedLabel.ZIP: [
        "Home address: {STREET}, {CITY}, {STATE} {ZIP}",
        "Zip code on file is {ZIP}.",
        "Insurance lists a billing zip of {ZIP}.",
    ],
    NormalizedLabel.LOC_OTHER: [
        "He was hiking near {LOCOTHER} when the pain began.",
        "She vacationed at {LOCOTHER} last summer.",
        "The injury occurred while skiing at {LOCOTHER}.",
        "He fell on the ice outside {LOCOTHER}.",
    ],
    NormalizedLabel.AGE: [
        "{PATIENT} is a {AGE} year old man with diabetes.",
        "This is a {AGE}-year-old woman with a history of asthma.",
        "The patient is a {AGE} yo male with COPD.",
        "Age: {AGE}",
        "Her mother died of breast cancer at age {AGE}.",
        "He is {AGE} years old and lives independently.",
        "Father had a myocardial infarction at {AGE}.",
    ],
    NormalizedLabel.DATE: [
        "Record date: {DATE}",
        "She was last seen on {DATE} for a routine visit.",
        "Colonoscopy on {DATE} showed two small polyps.",
        "Labs drawn {DATE} were notable for a creatinine of 1.4.",
        "He was discharged on {DATE} in stable condition.",
        "Follow up scheduled for {DATE}.",
        "Echocardiogram {DATE}: ejection fraction 55 percent.",
        "Symptoms began around {DATE} and have slowly progressed.",
        "Date of birth: {DATE}",
        "Last hemoglobin A1c was 7.2 on {DATE}.",
    ],
    NormalizedLabel.PHONE: [
        "He can be reached at {PHONE}.",
        "Her phone number is {PHONE} and she prefers afternoon calls.",
        "Call the clinic at {PHONE} with any questions.",
        "Contact: {PHONE}",
        "Daughter's cell phone is {PHONE}.",
    ],
    NormalizedLabel.FAX: [
        "Please fax results to {FAX}.",
        "Fax: {FAX}",
        "Records were faxed to {FAX} today.",
    ],
    NormalizedLabel.EMAIL: [
        "She can be contacted by email at {EMAIL} for scheduling.",
        "Email: {EMAIL}",
        "His email id is {EMAIL} and he checks it daily.",
        "Results were sent to {EMAIL} per patient request.",
    ],
    NormalizedLabel.URL: [
        "Patient education materials are available at {URL} for review.",
        "She was directed to {URL} to complete the questionnaire.",
        "Portal link {URL} was provided at discharge.",
    ],
    NormalizedLabel.IPADDRESS: [
        "Portal access logged from {IPADDRESS} during the visit.",
        "The telehealth session originated from {IPADDRESS} without issues.",
        "Device upload came from address {IPADDRESS} overnight.",
    ],
    NormalizedLabel.IDNUM: [
        "MRN: {MRN}",
        "Medical record number {MRN} was verified.",
        "SSN {SSN} on file.",
        "Social security number: {SSN}",
        "Health plan ID {HEALTHPLAN} was confirmed with the insurer.",
        "His policy number is {HEALTHPLAN} with Blue Cross.",
        "Account number {ACCOUNT} was updated.",
        "Driver license {LICENSE} was copied for the chart.",
        "Pacemaker serial number {DEVICE} was interrogated.",
    ],
}

FILLER = [
    "He denies chest pain, palpitations or syncope.",
    "Blood pressure today is 132/84 with a heart rate of 76.",
    "Lungs are clear to auscultation bilaterally.",
    "Abdomen is soft, nontender and nondistended.",
    "Continue metoprolol 25 mg twice daily.",
    "Start lisinopril 10 mg daily and recheck potassium in one week.",
    "She reports intermittent heartburn relieved by antacids.",
    "There is no evidence of peptic ulcer disease or neoplasm.",
    "Pathology findings document no evidence of Barrett's esophagus or H. Pylori infection.",
    "An EGD was performed concluding a small hiatal hernia and gastritis.",
    "Chronic GE reflux disease is stable on omeprazole.",
    "Hemoglobin A1c is 8.1 percent, up from 7.4.",
    "Creatinine 1.2, sodium 138, potassium 4.1.",
    "CT of the chest showed no pulmonary embolism.",
    "MRI of the lumbar spine demonstrated mild degenerative changes.",
    "Plan to increase Lasix to 40 mg daily.",
    "She quit smoking 10 years ago and drinks alcohol rarely.",
    "Extremities show trace bilateral edema.",
    "Neurologic exam is nonfocal.",
    "He was counseled on diet and exercise.",
    "Return to clinic in 3 months or sooner if needed.",
    "Assessment and plan discussed with the patient who agrees.",
    "Review of systems is otherwise negative.",
    "Weight is 84 kg, down 2 kg since the last visit.",
    "Influenza vaccine was administered today.",
    "LDL cholesterol is 132 on atorvastatin 20 mg.",
    "No known drug allergies.",
    "Medications reviewed and reconciled.",
    "Physical therapy referral was placed for knee pain.",
    "The rash on her forearm has resolved with topical steroids.",
    "Urinalysis was negative for infection.",
    "EKG shows normal sinus rhythm without ischemic changes.",
    "He uses albuterol 2 puffs as needed for wheezing.",
    "Glucose readings at home range from 110 to 180.",
    "Colonoscopy is due next year.",
    "Thyroid function tests were within normal limits.",
    "She has mild anemia with hemoglobin of 11.2.",
    "Aspirin 81 mg daily was continued.",
    "Warfarin dose adjusted for an INR of 3.4.",
    "Patient tolerated the procedure well.",
    "HPI:",
    "Past Medical History:",
    "Social History:",
    "Physical Exam:",
    "Medications:",
    "Plan:",
    "1. Hypertension, well controlled.",
    "2. Type 2 diabetes mellitus, suboptimal control.",
    "3. Hyperlipidemia on statin therapy.",
    "- metformin 1000 mg twice daily",
    "- amlodipine 5 mg daily",
    "Vital signs: T 98.6, BP 128/76, HR 68, RR 16, SpO2 97 percent.",
    "Chest x-ray from Monday showed no infiltrate.",
    "Biopsies were obtained from the antrum.",
    "Mammogram was unremarkable.",
    "Prostate specific antigen is 2.1.",
    "Follow up with Cardiology and Endocrinology as scheduled.",
    "Diet counseling was provided by the Nutrition service.",
]

_SLOT = re.compile(r"\{([A-Z]+)\}")


@dataclass
class GeneratorConfig:
    count: int = 100
    mean_length: int = 600
    weights: dict = field(default_factory=dict)
    seed: int = 0
    # probability that the next sentence carries PHI
    phi_rate: float = 0.5

    def validate(self):
        if self.count < 0:
            raise InvalidConfig("count must be non-negative")
        if self.mean_length < 1:
            raise InvalidConfig("mean_length must be positive")
        if not 0 <= self.phi_rate <= 1:
            raise InvalidConfig("phi_rate must lie in [0, 1]")
        for k, v in self.weights.items():
            try:
                NormalizedLabel(k)
            except ValueError:
                raise InvalidConfig(f"unknown label in weights: {k!r}") from None
            if v < 0:
                raise InvalidConfig(f"negative weight for {k}")
        return self

    def label_weights(self) -> list:
        return [float(self.weights.get(lab.value, 1.0)) for lab in PHI_LABELS]

    @classmethod
    def from_file(cls, path) -> "GeneratorConfig":
        """Read ``key = value`` lines: count, mean_length, seed, phi_rate, weight.<LABEL>."""
        cfg = cls()
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidConfig(f"{path}:{lineno}: expected key = value")
            key, value = (x.strip() for x in line.split("=", 1))
            try:
                if key == "count":
                    cfg.count = int(value)
                elif key == "mean_length":
                    cfg.mean_length = int(value)
                elif key == "seed":
                    cfg.seed = int(value)
                elif key == "phi_rate":
                    cfg.phi_rate = float(value)
                elif key.startswith("weight."):
                    cfg.weights[key[len("weight."):].upper()] = float(value)
                else:
                    raise InvalidConfig(f"{path}:{lineno}: unknown key {key!r}")
            except ValueError as exc:
                if isinstance(exc, InvalidConfig):
                    raise
                raise InvalidConfig(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
        return cfg.validate()


class _Values:
    def __init__(self, rng: random.Random):
        self.rng = rng

    def __call__(self, slot: str) -> str:
        return getattr(self, slot.lower())()

    def _first(self):
        return self.rng.choice(FIRST_NAMES)

    def _last(self):
        return self.rng.choice(LAST_NAMES)

    def patient(self):
        r = self.rng.random()
        if r < 0.45:
            return f"{self._first()} {self._last()}"
        if r < 0.6:
            return f"{self._first()} {self.rng.choice('ABCDEFGHJKLMNPRSTW')}. {self._last()}"
        return self._last()

    def doctor(self):
        r = self.rng.random()
        if r < 0.5:
            return f"{self._first()} {self._last()}"
        return self._last()

    def username(self):
        return f"{self._first()[0].lower()}{self._last().lower()}{self.rng.randint(1, 99)}"

    def profession(self):
        return self.rng.choice(PROFESSIONS)

    def _fill(self, pattern):
        return pattern.format(first=self._first(), last=self._last(),
                              city=self.rng.choice(CITIES))

    def hospital(self):
        return self._fill(self.rng.choice(HOSPITAL_PATTERNS))

    def organization(self):
        return self._fill(self.rng.choice(ORG_PATTERNS))

    def street(self):
        return (f"{self.rng.randint(1, 2999)} {self.rng.choice(STREET_NAMES)} "
                f"{self.rng.choice(STREET_SUFFIXES)}")

    def city(self):
        return self.rng.choice(CITIES)

    def state(self):
        return self.rng.choice(STATES)

    def country(self):
        return self.rng.choice(COUNTRIES)

    def zip(self):
        z = f"{self.rng.randint(1000, 99999):05d}"
        if self.rng.random() < 0.25:
            z += f"-{self.rng.randint(0, 9999):04d}"
        return z

    def locother(self):
        return self.rng.choice(LOC_OTHER)

    def age(self):
        return str(self.rng.randint(18, 99))

    def date(self):
        rng = self.rng
        y, m, d = rng.randint(1990, 2099), rng.randint(1, 12), rng.randint(1, 28)
        fmt = rng.randrange(8)
        if fmt == 0:
            return f"{m:02d}/{d:02d}/{y}"
        if fmt == 1:
            return f"{m}/{d}/{y % 100:02d}"
        if fmt == 2:
            return f"{y}-{m:02d}-{d:02d}"
        if fmt == 3:
            return f"{MONTHS[m - 1]} {d}, {y}"
        if fmt == 4:
            return f"{MONTHS[m - 1]} {y}"
        if fmt == 5:
            return f"{m}/{d}"
        if fmt == 6:
            return f"{d} {rng.choice(MONTHS_SHORT)} {y}"
        return str(y)

    def _digits(self, n):
        return "".join(str(self.rng.randint(0, 9)) for _ in range(n))

    def phone(self):
        a = f"{self.rng.randint(201, 989)}"
        b = f"{self.rng.randint(200, 999)}"
        c = self._digits(4)
        fmt = self.rng.randrange(4)
        if fmt == 0:
            return f"({a}) {b}-{c}"
        if fmt == 1:
            return f"{a}-{b}-{c}"
        if fmt == 2:
            return f"{a}.{b}.{c}"
        return f"+1 {a} {b} {c}"

    fax = phone

    def email(self):
        sep = self.rng.choice([".", "_", ""])
        user = f"{self._first().lower()}{sep}{self._last().lower()}"
        if self.rng.random() < 0.3:
            user += str(self.rng.randint(1, 99))
        return f"{user}@{self.rng.choice(DOMAINS)}"

    def url(self):
        word = self.rng.choice(WEB_WORDS)
        tld = self.rng.choice(["com", "org", "net"])
        if self.rng.random() < 0.5:
            return f"https://www.{word}.{tld}/patient/{self.rng.randint(100, 99999)}"
        return f"www.{word}.{tld}"

    def ipaddress(self):
        return ".".join(str(self.rng.randint(0, 255)) for _ in range(4))

    def ssn(self):
        return f"{self._digits(3)}-{self._digits(2)}-{self._digits(4)}"

    def mrn(self):
        if self.rng.random() < 0.7:
            return str(self.rng.randint(10**6, 10**8 - 1))
        return f"{self.rng.choice(['MR', 'BW', 'MGH'])}{self._digits(6)}"

    def healthplan(self):
        return f"{self.rng.choice(['XJH', 'BCB', 'HP', 'QWX'])}{self._digits(8)}"

    def account(self):
        return self._digits(self.rng.randint(8, 11))

    def license(self):
        return f"S{self._digits(8)}"

    def device(self):
        return f"{self.rng.choice(['PM', 'ICD', 'SN'])}{self._digits(7)}"


def _render(template: str, values: _Values, out: list, spans: list, offset: int) -> int:
    pos = 0
    for m in _SLOT.finditer(template):
        chunk = template[pos:m.start()]
        out.append(chunk)
        offset += len(chunk)
        slot = m.group(1)
        value = values(slot)
        cat, sub = _SLOT_CATEGORY[slot]
        spans.append(GoldSpan(offset, offset + len(value), value, PhiCategory(cat, sub)))
        out.append(value)
        offset += len(value)
        pos = m.end()
    tail = template[pos:]
    out.append(tail)
    return offset + len(tail)


def generate_record(rng: random.Random, config: GeneratorConfig, record_id: str) -> AnnotatedRecord:
    values = _Values(rng)
    weights = config.label_weights()
    labels = [lab for lab, w in zip(PHI_LABELS, weights)]
    has_phi = sum(weights) > 0
    target = max(1, int(config.mean_length * rng.uniform(0.5, 1.5)))
    out, spans = [], []
    offset = 0
    first = True
    while offset < target:
        if has_phi and rng.random() < config.phi_rate:
            lab = rng.choices(labels, weights)[0]
            template = rng.choice(TEMPLATES[lab])
        else:
            template = rng.choice(FILLER)
        if not first:
            r = rng.random()
            sep = "\n\n" if r < 0.1 else "\n" if r < 0.3 or template.endswith(":") else " "
            out.append(sep)
            offset += len(sep)
        # header-style lines end the line they sit on
        offset = _render(template, values, out, spans, offset)
        if template.endswith(":") or not template.endswith("."):
            out.append("\n")
            offset += 1
        first = False
    text = "".join(out)
    return AnnotatedRecord(record_id, text, spans)


def generate_synthetic(config: GeneratorConfig, seed: int = None) -> list[AnnotatedRecord]:
    """Generate ``config.count`` annotated records, deterministic per seed."""
    config.validate()
    seed = config.seed if seed is None else seed
    rng = random.Random(seed)
    width = max(4, len(str(config.count)))
    return [generate_record(rng, config, f"rec{i:0{width}d}") for i in range(config.count)]
